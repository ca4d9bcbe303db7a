"""Config documents, dataset files, run manifests and plot-ready CSVs.

Configs and manifests are JSON.  Datasets are two-column CSV files
(``user_id,item_id``), 1-based, sorted by ``(user_id, item_id)``, LF line
endings.  Every file is written to a temporary name and renamed into place.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .generator import GeneratorConfig, InteractionDataset
from .latent import ConfigurationError, PartitionSpec
from .sampling import LongTailSpec, ParameterError

REQUIRED_FIELDS = ("n_users", "n_items", "K", "item_pop_spec", "user_budget_spec")
DATASET_HEADER = "user_id,item_id"


class IngestionError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# --------------------------------------------------------------------------- #
# Config
# --------------------------------------------------------------------------- #


def config_from_dict(doc: dict) -> GeneratorConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a JSON object")
    known = set(GeneratorConfig.__dataclass_fields__)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigurationError(f"unknown config field(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED_FIELDS if k not in doc]
    if missing:
        raise ConfigurationError(f"missing required field(s): {', '.join(missing)}")
    kwargs = dict(doc)
    for name in ("item_pop_spec", "user_budget_spec"):
        try:
            kwargs[name] = LongTailSpec.from_dict(doc[name])
        except (ParameterError, AttributeError, TypeError) as e:
            raise ConfigurationError(f"{name}: {e}") from None
    if kwargs.get("affinity") is not None:
        kwargs["affinity"] = tuple(tuple(row) for row in kwargs["affinity"])
    try:
        return GeneratorConfig(**kwargs)
    except ParameterError as e:
        raise ConfigurationError(str(e)) from None


def parse_config(text: str) -> GeneratorConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config is not valid JSON: {e}") from None
    return config_from_dict(doc)


def serialize_config(config: GeneratorConfig) -> str:
    return json.dumps(config.to_dict(), indent=2) + "\n"


def load_config(path) -> GeneratorConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------- #
# Atomic file writes
# --------------------------------------------------------------------------- #


def _write_temp(path: Path, data: bytes) -> Path:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise
    return Path(tmp)


def atomic_write(path, data: bytes | str) -> None:
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    os.replace(_write_temp(path, data), path)


def atomic_write_many(files: dict) -> None:
    """Write several files so that either all of them appear or none do."""
    staged: list[tuple[Path, Path]] = []
    done: list[Path] = []
    try:
        for path, data in files.items():
            path = Path(path)
            if isinstance(data, str):
                data = data.encode("utf-8")
            staged.append((_write_temp(path, data), path))
        for tmp, path in staged:
            os.replace(tmp, path)
            done.append(path)
    except BaseException:
        for tmp, _ in staged:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
        for path in done:
            with contextlib.suppress(OSError):
                os.unlink(path)
        raise


# --------------------------------------------------------------------------- #
# Datasets
# --------------------------------------------------------------------------- #


def checksum(data: bytes) -> str:
    """64-bit BLAKE2b content hash as 16 hex digits."""
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def dataset_bytes(dataset: InteractionDataset) -> bytes:
    lines = [DATASET_HEADER]
    for u, h in enumerate(dataset.histories):
        lines.extend(f"{u + 1},{int(i) + 1}" for i in np.sort(np.asarray(h, dtype=np.int64)))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_dataset(dataset: InteractionDataset, path) -> str:
    data = dataset_bytes(dataset)
    atomic_write(path, data)
    return checksum(data)


def _parse_id(token: str, lineno: int) -> int:
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        raise IngestionError(f"non-integer id {token!r}", lineno) from None


def read_dataset(path, n_users: int | None = None, n_items: int | None = None,
                 compact: bool = False) -> InteractionDataset:
    """Load a two-column interaction CSV.

    Ids are expected to be integers.  A file whose smallest id is 0 is
    shifted to 1-based and the shift is kept in ``dataset.id_offset``.  With
    ``compact=True`` the distinct ids are relabelled ``1..n`` in sorted
    order and the originals kept in ``dataset.user_ids`` / ``dataset.item_ids``.
    A first line that is not two integers is treated as a header.
    """
    pairs: list[tuple[int, int]] = []
    first_line: dict[tuple[int, int], int] = {}
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 2:
                if lineno == 1:
                    raise IngestionError(f"expected two columns, got {len(parts)}", lineno)
                raise IngestionError(f"malformed row {line!r}", lineno)
            if lineno == 1 and not all(p.strip().lstrip("-").isdigit() for p in parts):
                continue
            pair = (_parse_id(parts[0], lineno), _parse_id(parts[1], lineno))
            if pair in first_line:
                raise IngestionError(f"duplicate pair {pair} (first seen at line {first_line[pair]})", lineno)
            first_line[pair] = lineno
            pairs.append(pair)

    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    user_ids = item_ids = None
    offset = 0
    if compact and arr.size:
        user_ids, u_idx = np.unique(arr[:, 0], return_inverse=True)
        item_ids, i_idx = np.unique(arr[:, 1], return_inverse=True)
        arr = np.column_stack([u_idx + 1, i_idx + 1])
    elif arr.size:
        lo = int(arr.min())
        if lo < 0:
            bad = int(np.flatnonzero((arr < 0).any(axis=1))[0])
            raise IngestionError("negative id", first_line[pairs[bad]])
        if lo == 0:
            offset = 1
            arr = arr + 1

    nu = int(arr[:, 0].max()) if arr.size else 0
    ni = int(arr[:, 1].max()) if arr.size else 0
    if n_users is not None:
        if nu > n_users:
            raise IngestionError(f"user id {nu} exceeds declared n_users={n_users}")
        nu = n_users
    if n_items is not None:
        if ni > n_items:
            raise IngestionError(f"item id {ni} exceeds declared n_items={n_items}")
        ni = n_items
    histories: list[list[int]] = [[] for _ in range(nu)]
    for u, i in arr:
        histories[u - 1].append(i - 1)
    return InteractionDataset(
        histories=[np.array(sorted(h), dtype=np.int64) for h in histories],
        n_items=ni,
        id_offset=offset,
        user_ids=user_ids,
        item_ids=item_ids,
    )


# --------------------------------------------------------------------------- #
# Manifest
# --------------------------------------------------------------------------- #


def build_manifest(dataset: InteractionDataset, partition: PartitionSpec, dataset_checksum: str) -> dict:
    cfg = dataset.config
    coords_u = np.repeat(np.arange(dataset.n_users), [len(h) for h in dataset.histories])
    coords_i = np.concatenate(dataset.histories) if dataset.n_interactions else np.empty(0, dtype=np.int64)
    pops = partition.user_assignment[coords_u]
    cats = partition.item_assignment[coords_i.astype(np.int64)]
    block = np.zeros((partition.p, partition.c), dtype=np.int64)
    np.add.at(block, (pops, cats), 1)
    return {
        "tool_version": __version__,
        "master_seed": cfg.master_seed,
        "dataset_checksum": dataset_checksum,
        "config_echo": cfg.to_dict(),
        "summary": {
            "n_users": dataset.n_users,
            "n_items": dataset.n_items,
            "n_interactions": dataset.n_interactions,
            "per_population": {f"U{j + 1}": int(block[j].sum()) for j in range(partition.p)},
            "per_category": {f"I{k + 1}": int(block[:, k].sum()) for k in range(partition.c)},
            "population_category": {f"U{j + 1}": {f"I{k + 1}": int(block[j, k]) for k in range(partition.c)}
                                    for j in range(partition.p)},
            "degenerate_rows": len(dataset.degenerate_users),
        },
    }


def manifest_text(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=False) + "\n"


# --------------------------------------------------------------------------- #
# Plot-ready CSVs
# --------------------------------------------------------------------------- #


def csv_text(header: str, rows) -> str:
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    return "\n".join([header] + [",".join(fmt(v) for v in row) for row in rows]) + "\n"


def matrix_csv(matrix: np.ndarray, prefix: str) -> str:
    header = "index," + ",".join(f"{prefix}{k + 1}" for k in range(matrix.shape[1]))
    rows = [(r + 1, *map(float, matrix[r])) for r in range(matrix.shape[0])]
    return csv_text(header, rows)
