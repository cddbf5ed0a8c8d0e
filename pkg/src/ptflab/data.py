"""Labeled examples and the example-set file format.

An example-set file is one JSON header line followed by CSV rows
``y_1,...,y_dim,b``. Floats are written with ``repr`` so a write/read cycle
is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class LabeledExample:
    y: np.ndarray
    b: int

    def __post_init__(self):
        if self.b not in (-1, 1):
            raise InputError(f"label must be +-1, got {self.b}")


@dataclass
class ExampleSet:
    Y: np.ndarray
    b: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.int8)
        if self.Y.ndim != 2 or self.b.shape != (self.Y.shape[0],):
            raise InputError(f"inconsistent shapes Y{self.Y.shape} b{self.b.shape}")
        if not np.isin(self.b, (-1, 1)).all():
            raise InputError("labels must be +-1")

    @property
    def dim(self) -> int:
        return self.Y.shape[1]

    def __len__(self) -> int:
        return self.Y.shape[0]

    def __iter__(self) -> Iterator[LabeledExample]:
        for row, lab in zip(self.Y, self.b):
            yield LabeledExample(row.copy(), int(lab))

    @classmethod
    def from_examples(cls, examples, meta: dict | None = None) -> "ExampleSet":
        examples = list(examples)
        if not examples:
            raise InputError("empty example list")
        return cls(np.stack([e.y for e in examples]), np.array([e.b for e in examples]), meta or {})


def format_examples(data: ExampleSet) -> str:
    header = {"dim": data.dim, "count": len(data)}
    header.update(data.meta)
    lines = [json.dumps(header, sort_keys=True)]
    lines += [",".join(repr(v) for v in row) + f",{lab}" for row, lab in zip(data.Y.tolist(), data.b.tolist())]
    return "\n".join(lines) + "\n"


def write_examples(path: str | Path, data: ExampleSet) -> None:
    Path(path).write_text(format_examples(data), encoding="utf-8")


def read_examples(path: str | Path) -> ExampleSet:
    with open(path, encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: bad header line: {exc}") from exc
        dim = int(header["dim"])
        rows, labels = [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if parts == [""]:
                continue
            if len(parts) != dim + 1:
                raise InputError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(parts)}")
            rows.append([float(v) for v in parts[:-1]])
            labels.append(int(parts[-1]))
    if len(rows) != int(header.get("count", len(rows))):
        raise InputError(f"{path}: header promises {header['count']} rows, found {len(rows)}")
    meta = {k: v for k, v in header.items() if k not in ("dim", "count")}
    Y = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return ExampleSet(Y, np.array(labels, dtype=np.int8), meta)
