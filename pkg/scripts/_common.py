"""Shared helpers for the figure scripts."""
import argparse
from pathlib import Path


def parser(description: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out", type=Path, default=Path("figures"), help="output directory")
    ap.add_argument("--quick", action="store_true", help="coarse grids for a fast preview")
    return ap


def pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt
