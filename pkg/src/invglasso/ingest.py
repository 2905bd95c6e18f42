"""Count-table ingestion, preprocessing, and artifact serialization.

File formats, all line-oriented with "\\n" terminators:

* count tables: delimited text (TSV or CSV), header row of taxon ids
  after a leading sample-id column, one sample per row, integer cells;
* matrices: dense TSV of decimal floats with 17 significant digits,
  which round-trips 64-bit floats exactly;
* edge sets: first line ``node_count<TAB>N``, then one sorted ``k<TAB>l``
  pair per line;
* metric records: CSV with the fixed column order
  replicate, lambda, nms, jaccard, hamming, tpr, fpr (blank = absent);
* run manifests: JSON with sorted keys, schema tag
  ``invglasso-manifest/1``.

Ingestion never alters counts; zero handling happens at transform time.
"""

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .compglasso import CountMatrix
from .errors import DomainError, EmptyDataError, ParseError, SchemaError
from .evaluate import EdgeSet

__all__ = [
    "OtuTable",
    "RunManifest",
    "MANIFEST_SCHEMA",
    "read_table",
    "write_table",
    "filter_low_depth",
    "rank_candidate_references",
    "CandidateRanking",
    "read_matrix",
    "write_matrix",
    "read_edge_set",
    "write_edge_set",
    "read_metrics_csv",
    "write_metrics_csv",
    "read_manifest",
    "write_manifest",
    "sha256_of_file",
]

MANIFEST_SCHEMA = "invglasso-manifest/1"
METRIC_COLUMNS = ("replicate", "lambda", "nms", "jaccard", "hamming", "tpr", "fpr")


@dataclass
class OtuTable:
    """Labelled sample-by-taxon count table."""

    taxon_ids: tuple
    sample_ids: tuple
    counts: np.ndarray

    def __post_init__(self):
        self.taxon_ids = tuple(str(t) for t in self.taxon_ids)
        self.sample_ids = tuple(str(s) for s in self.sample_ids)
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape != (
            len(self.sample_ids),
            len(self.taxon_ids),
        ):
            raise DomainError("counts shape must match the id lists")
        if len(set(self.taxon_ids)) != len(self.taxon_ids):
            raise DomainError("taxon_ids must be unique")
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise DomainError("sample_ids must be unique")
        if np.any(counts < 0) or np.any(counts.astype(np.int64) != counts):
            raise DomainError("counts must be nonnegative integers")
        self.counts = counts.astype(np.int64)

    @property
    def depths(self):
        return self.counts.sum(axis=1)

    def to_count_matrix(self):
        return CountMatrix(counts=self.counts, taxon_ids=self.taxon_ids)

    def taxon_index(self, taxon_id):
        """Column index of a taxon id."""
        try:
            return self.taxon_ids.index(str(taxon_id))
        except ValueError:
            raise DomainError(f"unknown taxon id {taxon_id!r}") from None


def _delimiter(path, fmt):
    if fmt is None:
        fmt = "csv" if str(path).lower().endswith(".csv") else "tsv"
    if fmt not in ("tsv", "csv"):
        raise DomainError(f"format must be 'tsv' or 'csv', got {fmt!r}")
    return "\t" if fmt == "tsv" else ","


def read_table(path, fmt=None):
    """Parse a count table file.

    Parameters
    ----------
    path : str or Path
    fmt : {"tsv", "csv"}, optional
        Defaults from the file extension (.csv means CSV, anything else
        TSV).

    Returns
    -------
    OtuTable

    Raises
    ------
    ParseError
        Ragged rows, non-integer or negative cells, duplicate ids; the
        message carries the 1-based line number.
    """
    delim = _delimiter(path, fmt)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delim))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2:
        raise ParseError("line 1: header needs a sample-id column and taxon ids")
    taxon_ids = tuple(h.strip() for h in header[1:])
    if len(set(taxon_ids)) != len(taxon_ids):
        raise ParseError("line 1: duplicate taxon ids")
    sample_ids = []
    counts = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        sid = row[0].strip()
        if sid in seen:
            raise ParseError(f"line {lineno}: duplicate sample id {sid!r}")
        seen.add(sid)
        parsed = []
        for taxon, cell in zip(taxon_ids, row[1:]):
            text = cell.strip()
            try:
                value = int(text)
            except ValueError:
                raise ParseError(
                    f"line {lineno}, taxon {taxon!r}: non-integer count {text!r}"
                ) from None
            if value < 0:
                raise ParseError(
                    f"line {lineno}, taxon {taxon!r}: negative count {value}"
                )
            parsed.append(value)
        sample_ids.append(sid)
        counts.append(parsed)
    if not sample_ids:
        raise ParseError(f"{path}: no sample rows")
    return OtuTable(
        taxon_ids=taxon_ids,
        sample_ids=tuple(sample_ids),
        counts=np.asarray(counts, dtype=np.int64),
    )


def write_table(table, path, fmt=None):
    """Write a count table; inverse of `read_table`."""
    delim = _delimiter(path, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delim, lineterminator="\n")
        writer.writerow(("sample_id",) + table.taxon_ids)
        for sid, row in zip(table.sample_ids, table.counts):
            writer.writerow((sid,) + tuple(int(v) for v in row))


def filter_low_depth(table, min_reads=100):
    """Drop samples whose total count falls below `min_reads`.

    Raises
    ------
    EmptyDataError
        When no sample survives.
    """
    if min_reads < 0:
        raise DomainError("min_reads must be nonnegative")
    keep = table.depths >= min_reads
    if not keep.any():
        raise EmptyDataError(
            f"no sample reaches {min_reads} reads (max depth {table.depths.max()})"
        )
    idx = np.flatnonzero(keep)
    return OtuTable(
        taxon_ids=table.taxon_ids,
        sample_ids=tuple(table.sample_ids[i] for i in idx),
        counts=table.counts[idx],
    )


@dataclass(frozen=True)
class CandidateRanking:
    """Reference candidates by decreasing average relative abundance.

    `complete` is False when fewer eligible taxa existed than were
    requested; `taxa` then holds all of them.
    """

    taxa: tuple
    averages: tuple
    complete: bool


def rank_candidate_references(table, exclude=(), top_m=2):
    """Rank taxa by average relative abundance across samples.

    Each sample's counts are normalized by its depth before averaging,
    so deep samples do not dominate. Ties break by taxon id
    (lexicographic), making the order deterministic.

    Parameters
    ----------
    table : OtuTable
    exclude : iterable of str
        Taxon ids to leave out of the ranking.
    top_m : int
        How many candidates to return.

    Returns
    -------
    CandidateRanking
    """
    if top_m < 1:
        raise DomainError("top_m must be at least 1")
    exclude = {str(t) for t in exclude}
    unknown = exclude - set(table.taxon_ids)
    if unknown:
        raise DomainError(f"exclude lists unknown taxa: {sorted(unknown)}")
    depths = table.depths
    if np.any(depths == 0):
        raise DomainError("zero-depth samples cannot be ranked; filter them first")
    rel = table.counts / depths[:, np.newaxis]
    averages = rel.mean(axis=0)
    eligible = [
        (taxon, float(averages[j]))
        for j, taxon in enumerate(table.taxon_ids)
        if taxon not in exclude
    ]
    eligible.sort(key=lambda item: (-item[1], item[0]))
    chosen = eligible[:top_m]
    return CandidateRanking(
        taxa=tuple(t for t, _ in chosen),
        averages=tuple(a for _, a in chosen),
        complete=len(chosen) == top_m,
    )


def _format_float(v):
    return format(float(v), ".17g")


def write_matrix(matrix, path):
    """Dense float TSV with lossless 17-significant-digit cells."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DomainError("only 2-D matrices are serialized")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in matrix:
            fh.write("\t".join(_format_float(v) for v in row))
            fh.write("\n")


def read_matrix(path):
    """Inverse of `write_matrix` (bit-exact for finite and non-finite)."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(
                    f"line {lineno}: expected {width} cells, got {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no matrix rows")
    return np.asarray(rows, dtype=np.float64)


def write_edge_set(edge_set, path):
    """Node count header plus sorted `k<TAB>l` pairs."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"node_count\t{edge_set.node_count}\n")
        for k, l in sorted(edge_set.edges):
            fh.write(f"{k}\t{l}\n")


def read_edge_set(path):
    """Inverse of `write_edge_set`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or not lines[0].startswith("node_count\t"):
        raise ParseError(f"{path}: missing node_count header")
    try:
        n = int(lines[0].split("\t")[1])
    except (IndexError, ValueError):
        raise ParseError(f"{path}: malformed node_count header") from None
    edges = set()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'k<TAB>l'")
        try:
            edges.add((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer node index") from None
    return EdgeSet(node_count=n, edges=frozenset(edges))


def write_metrics_csv(records, path):
    """Fixed-schema CSV of per-replicate, per-lambda metric records.

    Column order is exactly `METRIC_COLUMNS`; None values serialize as
    empty cells. Extra keys in the records are ignored.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for rec in records:
            row = []
            for col in METRIC_COLUMNS:
                value = rec.get(col)
                if value is None:
                    row.append("")
                elif col == "replicate":
                    row.append(str(int(value)))
                else:
                    row.append(_format_float(value))
            writer.writerow(row)


def read_metrics_csv(path):
    """Inverse of `write_metrics_csv`; empty cells come back as None."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != METRIC_COLUMNS:
        raise SchemaError(
            f"{path}: expected header {','.join(METRIC_COLUMNS)}"
        )
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(METRIC_COLUMNS):
            raise ParseError(f"line {lineno}: wrong field count")
        rec = {}
        for col, cell in zip(METRIC_COLUMNS, row):
            if cell == "":
                rec[col] = None
            elif col == "replicate":
                rec[col] = int(cell)
            else:
                rec[col] = float(cell)
        records.append(rec)
    return records


@dataclass
class RunManifest:
    """Everything needed to regenerate a run's outputs byte-for-byte.

    Attributes
    ----------
    command : str
        Which entry point produced the artifacts.
    provenance : dict
        Scenario parameters for simulated data, or input file path and
        content hash for ingested data.
    method : str, optional
        Estimation route, when one ran.
    reference : str or int, optional
    candidates : list, optional
    lambdas : list of float, optional
    seeds : dict
        Named seeds controlling every random draw.
    config : dict
        Solver and selection settings in effect.
    schema : str
        Format tag; readers reject anything unexpected.
    """

    command: str
    provenance: dict = field(default_factory=dict)
    method: str = None
    reference: object = None
    candidates: list = None
    lambdas: list = None
    seeds: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    schema: str = MANIFEST_SCHEMA

    def config_hash(self):
        """SHA-256 over the canonical JSON of the config block."""
        blob = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_manifest(manifest, path):
    """Sorted-key JSON with a config hash; stable byte-for-byte."""
    payload = asdict(manifest)
    payload["config_hash"] = manifest.config_hash()
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
        fh.write("\n")


def read_manifest(path):
    """Inverse of `write_manifest`; verifies schema tag and config hash."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
    if not isinstance(payload, dict) or payload.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(
            f"{path}: expected schema {MANIFEST_SCHEMA!r}, "
            f"got {payload.get('schema')!r}"
        )
    stored_hash = payload.pop("config_hash", None)
    known = {f for f in RunManifest.__dataclass_fields__}
    unknown = set(payload) - known
    if unknown:
        raise SchemaError(f"{path}: unknown manifest fields {sorted(unknown)}")
    manifest = RunManifest(**payload)
    if stored_hash is not None and stored_hash != manifest.config_hash():
        raise SchemaError(f"{path}: config hash mismatch")
    return manifest


def sha256_of_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
