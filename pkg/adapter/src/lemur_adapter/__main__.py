"""`python -m lemur_adapter`: serve the toy model over stdio."""

from __future__ import annotations

import sys

from .serve import serve

if __name__ == "__main__":
    sys.exit(serve())
