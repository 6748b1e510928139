"""
Plain-text problem files and run manifests.

Formats (all UTF-8, LF line endings, see docs/FORMATS.md):
    matrix  one matrix row per line, comma-separated decimals
    vector  one decimal per line (right-hand side b, anchor u, solutions)
    box     one coordinate per line, two whitespace-separated tokens, each a
            decimal literal or -inf / inf

Numbers are written with 17 significant digits so that reading a written
file reproduces every float64 exactly. Parse errors carry the file path and
the 1-based line number.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np
from numpy.typing import ArrayLike

from proshrink import __version__
from proshrink.boxset import BoxSet, Interval, IntervalError
from proshrink.core_linalg import DenseMatrix, DimensionMismatchError, Vector
from proshrink.dual import Problem

NUMBER_FORMAT = "%.17g"


class ProblemFormatError(ValueError):
    """
    Raised when a problem file cannot be parsed.

    Attributes:
        path: File that failed to parse
        line: 1-based line number of the offending line (0 for whole-file errors)
    """

    def __init__(self, path: str | Path, line: int, message: str) -> None:
        self.path = Path(path)
        self.line = line
        location = f"{self.path}:{line}" if line else str(self.path)
        super().__init__(f"{location}: {message}")


def _read_lines(path: str | Path) -> list[tuple[int, str]]:
    # Blank lines are allowed only at the end of the file
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    raw = path.read_text().splitlines()
    while raw and not raw[-1].strip():
        raw.pop()
    if not raw:
        raise ProblemFormatError(path, 0, "file is empty")
    for number, text in enumerate(raw, start=1):
        if not text.strip():
            raise ProblemFormatError(path, number, "blank line inside data")
    return [(number, text.strip()) for number, text in enumerate(raw, start=1)]


def _parse_number(path: Path, line: int, token: str, allow_infinite: bool = False) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ProblemFormatError(path, line, f"not a decimal number: {token!r}") from None
    if math.isnan(value):
        raise ProblemFormatError(path, line, "NaN is not allowed")
    if math.isinf(value) and not allow_infinite:
        raise ProblemFormatError(path, line, f"infinite value not allowed here: {token!r}")
    return value


def read_matrix(path: str | Path) -> DenseMatrix:
    """
    Read a comma-separated matrix file.

    Raises:
        FileNotFoundError: If the file does not exist
        ProblemFormatError: On bad tokens or ragged rows
    """
    path = Path(path)
    rows: list[list[float]] = []
    for line, text in _read_lines(path):
        row = [_parse_number(path, line, tok.strip()) for tok in text.split(",")]
        if rows and len(row) != len(rows[0]):
            raise ProblemFormatError(
                path, line, f"row has {len(row)} entries, expected {len(rows[0])}"
            )
        rows.append(row)
    return np.array(rows, dtype=np.float64)


def read_vector(path: str | Path) -> Vector:
    """Read a file with one decimal per line."""
    path = Path(path)
    values = []
    for line, text in _read_lines(path):
        if len(text.split()) != 1:
            raise ProblemFormatError(path, line, "expected exactly one number per line")
        values.append(_parse_number(path, line, text))
    return np.array(values, dtype=np.float64)


def read_box(path: str | Path) -> BoxSet:
    """
    Read a box file (lower and upper bound per line).

    Raises:
        ProblemFormatError: On a wrong token count, a bad token or an
            invalid interval such as lower > upper
    """
    path = Path(path)
    intervals = []
    for line, text in _read_lines(path):
        tokens = text.split()
        if len(tokens) != 2:
            raise ProblemFormatError(path, line, f"expected 2 tokens, got {len(tokens)}")
        lower, upper = (_parse_number(path, line, tok, allow_infinite=True) for tok in tokens)
        try:
            intervals.append(Interval(lower, upper))
        except IntervalError as exc:
            raise ProblemFormatError(path, line, str(exc)) from None
    return BoxSet.from_intervals(intervals)


def write_matrix(path: str | Path, A: ArrayLike) -> Path:
    path = Path(path)
    np.savetxt(path, np.atleast_2d(np.asarray(A, dtype=np.float64)), fmt=NUMBER_FORMAT, delimiter=",")
    return path


def write_vector(path: str | Path, x: ArrayLike) -> Path:
    path = Path(path)
    np.savetxt(path, np.atleast_1d(np.asarray(x, dtype=np.float64)), fmt=NUMBER_FORMAT)
    return path


def write_box(path: str | Path, box: BoxSet) -> Path:
    path = Path(path)
    np.savetxt(path, np.column_stack([box.lower, box.upper]), fmt=NUMBER_FORMAT, delimiter=" ")
    return path


@dataclass(frozen=True)
class ProblemFiles:
    """
    Locations of a problem on disk plus its scalar parameter.

    Attributes:
        matrix_path: Matrix file (m lines of n comma-separated values)
        rhs_path: Right-hand side file (m lines)
        tau: Augmentation parameter, positive
        box_path: Box file (n lines); None means the whole line
        u_path: Anchor file (n lines); None means u = 0
    """

    matrix_path: Path
    rhs_path: Path
    tau: float = 1.0
    box_path: Optional[Path] = None
    u_path: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def load_problem(files: ProblemFiles) -> Problem:
    """
    Read and cross-check a problem.

    Raises:
        FileNotFoundError: If a referenced file is missing
        ProblemFormatError: On malformed file contents
        DimensionMismatchError: If the files disagree on m or n
    """
    A = read_matrix(files.matrix_path)
    m, n = A.shape
    b = read_vector(files.rhs_path)
    if len(b) != m:
        raise DimensionMismatchError(
            f"{files.rhs_path} has {len(b)} lines but {files.matrix_path} has {m} rows"
        )
    if files.box_path is None:
        box = BoxSet.whole_line(n)
    else:
        box = read_box(files.box_path)
        if len(box) != n:
            raise DimensionMismatchError(
                f"{files.box_path} has {len(box)} lines but {files.matrix_path} has {n} columns"
            )
    u = None
    if files.u_path is not None:
        u = read_vector(files.u_path)
        if len(u) != n:
            raise DimensionMismatchError(
                f"{files.u_path} has {len(u)} lines but {files.matrix_path} has {n} columns"
            )
    return Problem(A, b, box, files.tau, u)


def write_problem(
    directory: str | Path,
    A: ArrayLike,
    b: ArrayLike,
    box: Optional[BoxSet] = None,
    tau: float = 1.0,
    u: Optional[ArrayLike] = None,
) -> ProblemFiles:
    """
    Write matrix.csv, rhs.txt and optionally box.txt / u.txt into a directory.

    Returns:
        ProblemFiles pointing at the written files
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    matrix_path = write_matrix(directory / "matrix.csv", A)
    rhs_path = write_vector(directory / "rhs.txt", b)
    box_path = write_box(directory / "box.txt", box) if box is not None else None
    u_path = write_vector(directory / "u.txt", u) if u is not None else None
    return ProblemFiles(matrix_path, rhs_path, tau, box_path, u_path)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """
    Record of one CLI run, written next to its outputs.

    Attributes:
        command: Subcommand name (solve, sweep, check)
        argv: Full argument list the run was started with
        parameters: Resolved parameters, including automatic step sizes and
            the spectral-norm estimate
        seed: Seed used by the run
        version: proshrink version that produced the outputs
        created_at: ISO timestamp (UTC)
    """

    command: str
    argv: list[str]
    parameters: dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    version: str = __version__
    created_at: str = field(default_factory=_utc_now)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunManifest:
        missing = {"command", "argv"} - data.keys()
        if missing:
            raise ValueError(f"manifest is missing fields: {sorted(missing)}")
        known = {k: data[k] for k in ("command", "argv", "parameters", "seed", "version", "created_at") if k in data}
        known["argv"] = [str(a) for a in known["argv"]]
        return cls(**known)

    def write(self, path: str | Path) -> Path:
        """Write the manifest as JSON through a temp file and rename."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        temp_file = path.with_suffix(".tmp")
        temp_file.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        temp_file.replace(path)
        return path

    @classmethod
    def read(cls, path: str | Path) -> RunManifest:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Manifest not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None
        return cls.from_dict(data)
