import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from PIL import Image

from scattering.imaging import ImageGrid
from utils.common import ensure_directory_exists, safe_json_dump, safe_json_load, format_seconds
from utils.exceptions import ArtifactError
from utils.logging import logger

MATRIX_MAGIC = b"SSRM"
MATRIX_HEADER = struct.Struct("<4sIIf")
MATRIX_DTYPE = np.dtype("<c16")
TIMING_COLUMNS = (("T_invert", "invert"), ("T_solver", "solver"), ("T_ffp", "ffp"), ("T_NUFFT", "nufft"))


class ArtifactService:
    """Reads and writes response matrices, image grids and run summaries."""

    def __init__(self, output_directory):
        self.output_dir = ensure_directory_exists(output_directory)

    def path(self, name: str) -> Path:
        return self.output_dir / name

    @staticmethod
    def matrix_name(harmonic: int) -> str:
        return f"response_h{harmonic}.ssrm"

    def write_response_matrix(self, values: np.ndarray, wavenumber: float, name: str) -> Path:
        """
        Store a complex matrix as a 16-byte header followed by row-major complex128.

        Args:
            values: M x N complex matrix
            wavenumber: Wavenumber recorded in the header
            name: File name inside the output directory

        Returns:
            Path of the written file

        Raises:
            ArtifactError: When the file cannot be written
        """
        values = np.ascontiguousarray(values, dtype=MATRIX_DTYPE)
        rows, cols = values.shape
        path = self.path(name)
        try:
            with open(path, "wb") as f:
                f.write(MATRIX_HEADER.pack(MATRIX_MAGIC, rows, cols, float(wavenumber)))
                f.write(values.tobytes(order="C"))
        except OSError as e:
            raise ArtifactError(f"cannot write response matrix {path}: {e}") from e
        logger.info(f"Wrote {rows}x{cols} response matrix to {path}")
        return path

    @staticmethod
    def read_response_matrix(path) -> Tuple[np.ndarray, float]:
        """
        Load a matrix written by ``write_response_matrix``.

        Returns:
            Tuple of (values, wavenumber)

        Raises:
            ArtifactError: On a missing file, bad magic or truncated payload
        """
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as e:
            raise ArtifactError(f"cannot read response matrix {path}: {e}") from e
        if len(data) < MATRIX_HEADER.size:
            raise ArtifactError(f"{path} is too short for a response-matrix header")
        magic, rows, cols, wavenumber = MATRIX_HEADER.unpack_from(data)
        if magic != MATRIX_MAGIC:
            raise ArtifactError(f"{path} is not a response-matrix file (magic {magic!r})")
        expected = MATRIX_HEADER.size + rows * cols * MATRIX_DTYPE.itemsize
        if len(data) != expected:
            raise ArtifactError(f"{path} holds {len(data)} bytes, expected {expected} for {rows}x{cols}")
        values = np.frombuffer(data, dtype=MATRIX_DTYPE, offset=MATRIX_HEADER.size).reshape(rows, cols)
        return values.astype(complex), float(wavenumber)

    def write_image(self, image: ImageGrid, stem: str) -> Dict[str, Path]:
        """Write |I| as a CSV grid and an 8-bit grayscale PNG, row 0 at the largest y."""
        coords = image.domain.coordinates
        magnitude = image.magnitude[::-1]
        csv_path = self.path(f"{stem}.csv")
        png_path = self.path(f"{stem}.png")

        frame = pd.DataFrame(magnitude, index=pd.Index(coords[::-1], name="y"), columns=coords)
        frame.to_csv(csv_path, float_format="%.12e")

        pixels = np.round(image.normalized()[::-1] * 255.0).astype(np.uint8)
        Image.fromarray(pixels).save(png_path, format="PNG")
        logger.info(f"Wrote image for harmonic {image.harmonic} to {png_path}")
        return {"csv": csv_path, "png": png_path}

    def write_summary(self, data: Dict, name: str = "summary.json") -> Path:
        path = self.path(name)
        if not safe_json_dump(data, path):
            raise ArtifactError(f"cannot write summary {path}")
        return path

    def read_summary(self, name: str = "summary.json") -> Optional[Dict]:
        return safe_json_load(self.path(name))

    @staticmethod
    def timing_table(timings_by_harmonic: Dict[int, Dict[str, float]]) -> pd.DataFrame:
        """One row per harmonic with the T_invert, T_solver, T_ffp and T_NUFFT columns."""
        rows = []
        for harmonic in sorted(timings_by_harmonic):
            timings = timings_by_harmonic[harmonic]
            row = {"harmonic": harmonic}
            for column, key in TIMING_COLUMNS:
                row[column] = format_seconds(timings.get(key))
            rows.append(row)
        return pd.DataFrame(rows, columns=["harmonic"] + [c for c, _ in TIMING_COLUMNS]).set_index("harmonic")
