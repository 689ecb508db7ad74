"""Planted-topic textual networks for smoke tests and demos.

Each vertex belongs to one topic. Its text mixes topic-specific words with a
shared background vocabulary, and edges fall mostly inside topics, so both
text and structure carry signal about links and labels.
"""

from __future__ import annotations

import numpy as np

from neifa.graph_store import TextualNetwork


def planted_network(
    num_vertices: int = 200,
    num_topics: int = 4,
    avg_degree: float = 4.0,
    p_within: float = 0.9,
    words_per_topic: int = 30,
    background_words: int = 60,
    text_len: tuple[int, int] = (8, 30),
    topic_word_share: float = 0.6,
    empty_text_rate: float = 0.0,
    seed: int = 0,
) -> TextualNetwork:
    rng = np.random.default_rng(seed)
    topic = rng.integers(0, num_topics, size=num_vertices)
    members = [np.flatnonzero(topic == c) for c in range(num_topics)]

    texts = []
    for v in range(num_vertices):
        if rng.random() < empty_text_rate:
            texts.append(())
            continue
        n = int(rng.integers(text_len[0], text_len[1] + 1))
        own = rng.random(n) < topic_word_share
        words = np.where(
            own,
            [f"t{topic[v]}w{k}" for k in rng.integers(0, words_per_topic, n)],
            [f"bg{k}" for k in rng.integers(0, background_words, n)],
        )
        texts.append(tuple(str(w) for w in words))

    target = int(round(avg_degree * num_vertices / 2))
    pairs: list[tuple[int, int]] = []
    seen = set()
    while len(pairs) < target:
        u = int(rng.integers(num_vertices))
        if rng.random() < p_within and len(members[topic[u]]) > 1:
            v = int(rng.choice(members[topic[u]]))
        else:
            v = int(rng.integers(num_vertices))
        key = (min(u, v), max(u, v))
        if u != v and key not in seen:
            seen.add(key)
            pairs.append(key)

    names = tuple(f"topic{c}" for c in range(num_topics))
    return TextualNetwork(num_vertices, tuple(pairs), tuple(texts), tuple(int(c) for c in topic), names)
