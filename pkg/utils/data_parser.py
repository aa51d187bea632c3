#!/usr/bin/env python3
"""
Data parser utility for the files the toolkit reads and writes: CSV exports,
pair lists, and shape-headed float64 matrix blobs (feature stores, snapshots).
"""
import csv
import struct
from pathlib import Path
from typing import Dict, Any, List, Tuple, Union

import numpy as np

from hypersphere.exceptions import FormatError
from utils.logger import logger

BLOB_MAGIC = b"HSPH"
BLOB_VERSION = 1


class DataParser:
    """Reads and writes the toolkit's file formats."""

    def __init__(self, data_root: str = "."):
        self.data_root = Path(data_root)

    def _get_file_path(self, *path_parts: Union[str, Path]) -> Path:
        """Build file path from parts."""
        return self.data_root / Path(*path_parts)

    # Generic File Operations
    def read_file(self, *path_parts: str, encoding: str = 'utf-8') -> str:
        """Read any text file."""
        file_path = self._get_file_path(*path_parts)
        try:
            with open(file_path, 'r', encoding=encoding) as f:
                content = f.read()
            logger.debug(f"Read file: {file_path}")
            return content
        except FileNotFoundError:
            logger.error(f"File not found: {file_path}")
            raise

    # CSV Operations
    def write_csv(self, rows: List[Dict[str, Any]], *path_parts: str, fieldnames: List[str]) -> Path:
        """Write rows to a CSV file; the header is written even when there are no rows."""
        file_path = self._get_file_path(*path_parts)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with open(file_path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.DictWriter(f, fieldnames=fieldnames)
                writer.writeheader()
                writer.writerows(rows)
        except OSError as e:
            logger.error(f"Error writing CSV file {file_path}: {e}")
            raise
        logger.log_artifact(str(file_path))
        return file_path

    def read_csv(self, *path_parts: str) -> List[Dict[str, str]]:
        """Read a CSV file with a header row."""
        file_path = self._get_file_path(*path_parts)
        try:
            with open(file_path, 'r', encoding='utf-8', newline='') as f:
                data = list(csv.DictReader(f))
        except FileNotFoundError:
            logger.error(f"CSV file not found: {file_path}")
            raise
        logger.debug(f"Read CSV file: {file_path}")
        return data

    # Pair list Operations
    def read_pair_list(self, *path_parts: str) -> List[Tuple[int, int, bool]]:
        """Read `id_a id_b label` lines; blank lines and `#` comments are skipped."""
        content = self.read_file(*path_parts)
        pairs = []
        for line_no, line in enumerate(content.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 3:
                raise FormatError(f"line {line_no}", f"expected 'id_a id_b label', got {line!r}")
            try:
                id_a, id_b, label = int(fields[0]), int(fields[1]), int(fields[2])
            except ValueError:
                raise FormatError(f"line {line_no}", f"non-integer field in {line!r}") from None
            if label not in (0, 1):
                raise FormatError(f"line {line_no}", f"label must be 0 or 1, got {label}")
            pairs.append((id_a, id_b, bool(label)))
        logger.debug(f"Read {len(pairs)} pairs")
        return pairs

    # Matrix blob Operations
    def write_matrices(self, matrices: List[np.ndarray], *path_parts: str) -> Path:
        """Write a versioned blob: magic, version, count, then (ndim, dims, float64 data) per matrix."""
        file_path = self._get_file_path(*path_parts)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, 'wb') as f:
            f.write(BLOB_MAGIC)
            f.write(struct.pack("<II", BLOB_VERSION, len(matrices)))
            for matrix in matrices:
                array = np.ascontiguousarray(matrix, dtype="<f8")
                f.write(struct.pack("<I", array.ndim))
                f.write(struct.pack(f"<{array.ndim}I", *array.shape))
                f.write(array.tobytes())
        logger.log_artifact(str(file_path))
        return file_path

    def read_matrices(self, *path_parts: str) -> List[np.ndarray]:
        """Read a blob written by write_matrices."""
        file_path = self._get_file_path(*path_parts)
        try:
            payload = file_path.read_bytes()
        except FileNotFoundError:
            logger.error(f"Blob file not found: {file_path}")
            raise

        if payload[:4] != BLOB_MAGIC:
            raise FormatError("magic", f"expected {BLOB_MAGIC!r}, got {payload[:4]!r}")
        offset = 4
        version, count = self._unpack(payload, "<II", offset, "header")
        offset += 8
        if version != BLOB_VERSION:
            raise FormatError("version", f"unsupported blob version {version}")

        matrices = []
        for index in range(count):
            (ndim,) = self._unpack(payload, "<I", offset, f"matrix {index} ndim")
            offset += 4
            shape = self._unpack(payload, f"<{ndim}I", offset, f"matrix {index} shape")
            offset += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            end = offset + 8 * size
            if end > len(payload):
                raise FormatError(f"matrix {index} data", "truncated")
            matrices.append(np.frombuffer(payload[offset:end], dtype="<f8").reshape(shape).astype(np.float64))
            offset = end
        logger.debug(f"Read {len(matrices)} matrices from {file_path}")
        return matrices

    @staticmethod
    def _unpack(payload: bytes, fmt: str, offset: int, field: str) -> tuple:
        size = struct.calcsize(fmt)
        if offset + size > len(payload):
            raise FormatError(field, "truncated")
        return struct.unpack_from(fmt, payload, offset)


# Global data parser instance
data_parser = DataParser()
