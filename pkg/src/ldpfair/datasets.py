"""Dataset generation and ingestion.

Synthetic generators cover the two standard shapes (discretized Gaussian and
Uniform).  Ingestion canonicalizes raw CSV data into a Dataset: a contiguous
integer domain [0, K), one value per user, plus a labels table mapping
indices back to the raw values.  Three ingestion modes match the common
preprocessing patterns: a single categorical column, transaction rows reduced
to each user's most frequent item, and a two-column cross product.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .rng import Stream, draw_at, u64_to_below, u64_to_unit


class ParseError(Exception):
    """Malformed input row; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyAfterFilter(Exception):
    """Preprocessing removed every user."""


@dataclass(frozen=True)
class Dataset:
    """A population's true values over a finite integer domain."""

    domain_size: int
    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.domain_size < 1:
            raise ValueError("domain_size must be >= 1")
        values = np.asarray(self.values, dtype=np.int64)
        if values.size < 1:
            raise ValueError("need at least one user")
        if values.min() < 0 or values.max() >= self.domain_size:
            raise ValueError("values must lie in [0, domain_size)")
        object.__setattr__(self, "values", values)
        if self.labels is not None and len(self.labels) != self.domain_size:
            raise ValueError("labels must cover the whole domain")

    @property
    def n_users(self) -> int:
        return int(self.values.size)


def _stream_draws(rng: Stream, n: int) -> np.ndarray:
    """Vectorized view of the next n draws of a stream (advances its counter)."""
    base = np.uint64(rng.seed)
    counters = np.arange(rng.counter + 1, rng.counter + n + 1, dtype=np.uint64)
    rng.counter += n
    return draw_at(np.full(n, base, dtype=np.uint64), counters)


def gen_gaussian(
    mu: float = 50.0,
    sigma: float = 7.0,
    n: int = 100_000,
    domain_size: int = 100,
    rng: Stream | None = None,
) -> Dataset:
    """Discretized Gaussian values: round(Normal(mu, sigma)) clamped to the domain."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if rng is None:
        rng = Stream(0)
    draws = _stream_draws(rng, n)
    normal = mu + sigma * ndtri(u64_to_unit(draws))
    values = np.clip(np.rint(normal), 0, domain_size - 1).astype(np.int64)
    return Dataset(domain_size=domain_size, values=values)


def gen_uniform(n: int = 100_000, domain_size: int = 100, rng: Stream | None = None) -> Dataset:
    """I.i.d. uniform values over [0, domain_size)."""
    if rng is None:
        rng = Stream(0)
    draws = _stream_draws(rng, n)
    return Dataset(domain_size=domain_size, values=u64_to_below(draws, domain_size))


def true_frequencies(dataset: Dataset) -> np.ndarray:
    """Per-item true frequencies; non-negative, sums to 1."""
    return np.bincount(dataset.values, minlength=dataset.domain_size) / dataset.n_users


@dataclass(frozen=True)
class IngestOptions:
    """How to interpret a raw CSV file.

    mode:
      "single"       one categorical column per row (one row per user)
      "transactions" each row lists one user's items; the user's value is
                     their most frequent retained item
      "cross"        two categorical columns; the domain is their cross
                     product, rows with missing fields dropped
    top_k filters to the K most frequent items (by total count, ties by first
    appearance); users left without a value are dropped.
    """

    mode: str = "single"
    delimiter: str = ","
    has_header: bool = False
    columns: tuple[int, ...] = (0,)
    top_k: int | None = None
    missing_tokens: frozenset[str] = field(default_factory=lambda: frozenset({"", "?"}))


def _read_rows(path: str, options: IngestOptions) -> list[tuple[int, list[str]]]:
    rows: list[tuple[int, list[str]]] = []
    with open(path, newline="") as f:
        reader = csv.reader(f, delimiter=options.delimiter)
        for lineno, row in enumerate(reader, start=1):
            if options.has_header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            rows.append((lineno, [c.strip() for c in row]))
    return rows


def _top_k_items(counts: Counter, first_seen: dict[str, int], k: int | None) -> list[str]:
    items = sorted(counts, key=lambda it: (-counts[it], first_seen[it]))
    return items if k is None else items[:k]


def ingest_csv(path: str, options: IngestOptions) -> Dataset:
    """Canonicalize a raw CSV into a Dataset; see IngestOptions for modes."""
    rows = _read_rows(path, options)
    if options.mode == "single":
        return _ingest_single(rows, options)
    if options.mode == "transactions":
        return _ingest_transactions(rows, options)
    if options.mode == "cross":
        return _ingest_cross(rows, options)
    raise ValueError(f"unknown ingestion mode: {options.mode!r}")


def _ingest_single(rows, options: IngestOptions) -> Dataset:
    col = options.columns[0]
    raw: list[str] = []
    counts: Counter = Counter()
    first_seen: dict[str, int] = {}
    for lineno, row in rows:
        if col >= len(row):
            raise ParseError(lineno, f"expected at least {col + 1} columns, got {len(row)}")
        value = row[col]
        if value in options.missing_tokens:
            continue
        raw.append(value)
        counts[value] += 1
        if value not in first_seen:
            first_seen[value] = len(first_seen)
    kept = _top_k_items(counts, first_seen, options.top_k)
    index = {item: i for i, item in enumerate(kept)}
    values = [index[v] for v in raw if v in index]
    if not values:
        raise EmptyAfterFilter("no users left after filtering")
    return Dataset(domain_size=len(kept), values=np.array(values), labels=tuple(kept))


def _ingest_transactions(rows, options: IngestOptions) -> Dataset:
    counts: Counter = Counter()
    first_seen: dict[str, int] = {}
    baskets: list[list[str]] = []
    for _, row in rows:
        items = [c for c in row if c not in options.missing_tokens]
        if not items:
            continue
        baskets.append(items)
        for item in items:
            counts[item] += 1
            if item not in first_seen:
                first_seen[item] = len(first_seen)
    kept = _top_k_items(counts, first_seen, options.top_k)
    index = {item: i for i, item in enumerate(kept)}
    values = []
    for basket in baskets:
        per_user = Counter(index[it] for it in basket if it in index)
        if not per_user:
            continue
        # most frequent retained item; ties to the smallest item index
        best = min(per_user, key=lambda i: (-per_user[i], i))
        values.append(best)
    if not values:
        raise EmptyAfterFilter("no users left after filtering")
    return Dataset(domain_size=len(kept), values=np.array(values), labels=tuple(kept))


def _sort_key(value: str):
    try:
        return (0, int(value), value)
    except ValueError:
        return (1, 0, value)


def _ingest_cross(rows, options: IngestOptions) -> Dataset:
    if len(options.columns) != 2:
        raise ValueError("cross mode needs exactly two columns")
    ca, cb = options.columns
    pairs: list[tuple[str, str]] = []
    for lineno, row in rows:
        if max(ca, cb) >= len(row):
            raise ParseError(lineno, f"expected at least {max(ca, cb) + 1} columns, got {len(row)}")
        a, b = row[ca], row[cb]
        if a in options.missing_tokens or b in options.missing_tokens:
            continue
        pairs.append((a, b))
    if not pairs:
        raise EmptyAfterFilter("no users left after dropping missing fields")
    a_values = sorted({a for a, _ in pairs}, key=_sort_key)
    b_values = sorted({b for _, b in pairs}, key=_sort_key)
    a_index = {v: i for i, v in enumerate(a_values)}
    b_index = {v: i for i, v in enumerate(b_values)}
    nb = len(b_values)
    values = np.array([a_index[a] * nb + b_index[b] for a, b in pairs])
    labels = tuple(f"{a},{b}" for a in a_values for b in b_values)
    return Dataset(domain_size=len(a_values) * nb, values=values, labels=labels)


def save_dataset(path: str, dataset: Dataset) -> None:
    """Canonical dataset file: '# domain_size=<int>' then one value per line."""
    with open(path, "w") as f:
        f.write(f"# domain_size={dataset.domain_size}\n")
        for v in dataset.values:
            f.write(f"{int(v)}\n")


def load_dataset(path: str) -> Dataset:
    """Read a canonical dataset file written by save_dataset."""
    with open(path) as f:
        header = f.readline().strip()
        if not header.startswith("# domain_size="):
            raise ParseError(1, "expected '# domain_size=<int>' header")
        try:
            domain_size = int(header.split("=", 1)[1])
        except ValueError as exc:
            raise ParseError(1, f"bad domain_size: {header!r}") from exc
        values = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise ParseError(lineno, f"bad value: {line!r}") from exc
    if not values:
        raise EmptyAfterFilter("dataset file has no values")
    return Dataset(domain_size=domain_size, values=np.array(values))
