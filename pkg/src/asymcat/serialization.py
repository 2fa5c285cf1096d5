"""Matrix (de)serialization: paired real/imaginary CSV files and JSON."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np


def read_real_csv(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            rows.append([float(tok) for tok in line.split(",")])
    a = np.array(rows, dtype=float)
    if a.ndim != 2 or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: ragged matrix")
    return a


def write_real_csv(path, m, digits: int = 12) -> None:
    m = np.asarray(m, dtype=float)
    lines = [",".join(f"{v:.{digits}g}" for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")


def read_complex_csv(re_path, im_path) -> np.ndarray:
    re = read_real_csv(re_path)
    im = read_real_csv(im_path)
    if re.shape != im.shape:
        raise ValueError(f"real part {re.shape} and imaginary part {im.shape} differ in shape")
    return re + 1j * im


def write_complex_csv(re_path, im_path, m, digits: int = 12) -> None:
    m = np.asarray(m, dtype=complex)
    write_real_csv(re_path, m.real, digits)
    write_real_csv(im_path, m.imag, digits)


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)


def bundled_data_path(name: str) -> Path:
    return Path(str(resources.files("asymcat") / "data" / name))


def load_process_matrix(re_path=None, im_path=None) -> np.ndarray:
    """The measured 16x16 process matrix; defaults to the copy shipped with the package."""
    re_path = re_path or bundled_data_path("mp_real.csv")
    im_path = im_path or bundled_data_path("mp_imag.csv")
    return read_complex_csv(re_path, im_path)
