"""Motif semantic graphs and dual-view contrastive node embeddings."""

from ._fsgcl import *  # noqa: F401,F403
from ._fsgcl import __version__  # noqa: F401
