"""Probe-captioning (Pro-Cap) for hateful meme detection.

A frozen vision-language model answers a fixed bank of probing questions
about each meme image; the gated answers become a caption that a text-only
classifier (sentence-encoder head or prompt-based masked-LM head) reads
alongside the meme text.
"""

__version__ = "0.1.0"
