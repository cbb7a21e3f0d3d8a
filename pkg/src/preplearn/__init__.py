"""Preparation-learning video service.

Students annotate lecture videos with timestamped responses; questions are
answered immediately by a chat-completion provider using nearby subtitle
context, and teachers review, correct, and extend those tentative answers.
"""

__version__ = "0.1.0"
