import csv
import logging
import os
from typing import Iterable, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DENSITY_COLUMNS = [
    "rho00_re", "rho00_im", "rho01_re", "rho01_im",
    "rho10_re", "rho10_im", "rho11_re", "rho11_im",
]
FIG2_THEORY_HEADER = ["t"] + DENSITY_COLUMNS
FIG2_EXP_HEADER = ["t"] + DENSITY_COLUMNS + [f"{name}_std" for name in DENSITY_COLUMNS]
FIDELITIES_HEADER = ["t", "fidelity", "fidelity_std"]
FIG3B_HEADER = ["t", "p0_theory", "p0_postselected", "success_prob"]
COUNTS_HEADER = ["t", "axis", "n_plus", "n_minus", "shots"]


def format_value(value) -> str:
    """Shortest round-trip text for floats; -0.0 is written as 0.0."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value) + 0.0)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def density_columns(rho) -> List[float]:
    """Row-major (re, im) pairs of a 2x2 matrix."""
    rho = np.asarray(rho)
    values: List[float] = []
    for i in range(2):
        for j in range(2):
            values.extend([float(rho[i, j].real), float(rho[i, j].imag)])
    return values


def save_csv(output_dir: str, filename: str, header: Sequence[str], rows: Iterable[Sequence]) -> bool:
    """
    Write a CSV file with a header row into output_dir.

    Args:
        output_dir: Directory to write into (created if missing)
        filename: File name inside output_dir
        header: Column names
        rows: Row values; floats are written with shortest round-trip repr

    Returns:
        bool: True if successful, False otherwise
    """
    path = os.path.join(output_dir, filename)
    try:
        os.makedirs(output_dir, exist_ok=True)

        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            count = 0
            for row in rows:
                writer.writerow([format_value(v) for v in row])
                count += 1

        logger.info(f"Saved {count} rows to {path}")
        return True

    except OSError as e:
        logger.error(f"Error saving {path}: {e}")
        return False
