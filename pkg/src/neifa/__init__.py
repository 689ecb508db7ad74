"""Textual network embedding with complementary information fusion and mutual gating."""

__version__ = "0.1.0"
