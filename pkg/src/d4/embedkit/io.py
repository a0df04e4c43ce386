"""Embedding sets, on-disk embedding formats, and word-list files.

The binary format is byte-compatible with the common word2vec layout: an
ASCII header "<vocab_size> <dim>\\n", then per word its UTF-8 bytes, one
space, and dim little-endian IEEE-754 single-precision floats, optionally
followed by one newline byte. Vectors are widened to double precision in
memory; saving writes single precision, and the newline convention seen
at load time is kept so that save(load(f)) reproduces f byte for byte.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import (
    DimensionMismatchError,
    DuplicateWordWarning,
    FileFormatError,
    MalformedHeaderError,
    MissingWordError,
    TruncatedRecordError,
)


class EmbeddingSet:
    """An ordered vocabulary with one vector per word.

    `normalized` records whether rows are (claimed to be) unit length;
    `binary_newlines` records the record terminator convention of the
    binary file this set was loaded from, if any.
    """

    __slots__ = ("vocab", "vectors", "normalized", "binary_newlines", "_index", "_unit")

    def __init__(self, vocab, vectors, normalized: bool = False, binary_newlines: bool = True):
        vocab = tuple(vocab)
        V = np.asarray(vectors, dtype=float)
        if V.ndim != 2:
            raise DimensionMismatchError("vectors must form a 2-D matrix")
        if len(vocab) != V.shape[0]:
            raise DimensionMismatchError(
                f"{len(vocab)} words but {V.shape[0]} vector rows"
            )
        if len(set(vocab)) != len(vocab):
            raise ValueError("vocabulary contains duplicate words")
        if normalized:
            norms = np.linalg.norm(V, axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-6:
                raise ValueError("normalized flag set but rows are not unit length")
        self.vocab = vocab
        self.vectors = V
        self.vectors.setflags(write=False)
        self.normalized = bool(normalized)
        self.binary_newlines = bool(binary_newlines)
        self._index = {w: i for i, w in enumerate(vocab)}
        self._unit = None

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise MissingWordError(f"word {word!r} not in vocabulary") from None

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.index(word)]

    def unit_vectors(self) -> np.ndarray:
        """Row-normalized copy of the matrix (zero rows stay zero); cached."""
        if self.normalized:
            return self.vectors
        if self._unit is None:
            norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
            safe = np.where(norms > 0.0, norms, 1.0)
            unit = self.vectors / safe
            unit.setflags(write=False)
            self._unit = unit
        return self._unit

    def with_vectors(self, vectors, normalized: bool = False) -> "EmbeddingSet":
        """Same vocabulary and file conventions, new vector matrix."""
        return EmbeddingSet(self.vocab, vectors, normalized, self.binary_newlines)


def _dedupe(words: list[str], rows: list[np.ndarray], source: str):
    seen: dict[str, int] = {}
    out_words: list[str] = []
    out_rows: list[np.ndarray] = []
    dropped: list[str] = []
    for w, r in zip(words, rows):
        if w in seen:
            dropped.append(w)
            continue
        seen[w] = len(out_words)
        out_words.append(w)
        out_rows.append(r)
    if dropped:
        warnings.warn(
            f"{source}: {len(dropped)} duplicate words (kept first occurrence): "
            f"{sorted(set(dropped))[:10]}",
            DuplicateWordWarning,
            stacklevel=3,
        )
    return out_words, out_rows


def load_word2vec_binary(path) -> EmbeddingSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    newline_at = blob.find(b"\n")
    if newline_at < 0:
        raise MalformedHeaderError(f"{path}: no header line")
    header = blob[:newline_at]
    parts = header.split()
    try:
        n, dim = int(parts[0]), int(parts[1])
        if len(parts) != 2 or n < 0 or dim < 1:
            raise ValueError
    except (ValueError, IndexError):
        raise MalformedHeaderError(
            f"{path}: header must be '<vocab_size> <dim>', got {header[:60]!r}"
        ) from None
    offset = newline_at + 1
    record_bytes = 4 * dim
    words: list[str] = []
    rows: list[np.ndarray] = []
    newlines = True
    for i in range(n):
        # Tolerate newline bytes before a word (both conventions occur).
        while offset < len(blob) and blob[offset : offset + 1] == b"\n":
            offset += 1
        space_at = blob.find(b" ", offset)
        if space_at < 0:
            raise TruncatedRecordError(f"{path}: record {i} has no word terminator")
        word = blob[offset:space_at].decode("utf-8", errors="strict")
        offset = space_at + 1
        payload = blob[offset : offset + record_bytes]
        if len(payload) < record_bytes:
            raise TruncatedRecordError(
                f"{path}: record {i} ({word!r}) truncated mid-vector"
            )
        words.append(word)
        rows.append(np.frombuffer(payload, dtype="<f4").astype(np.float64))
        offset += record_bytes
        if i == 0:
            newlines = blob[offset : offset + 1] == b"\n"
    words, rows = _dedupe(words, rows, str(path))
    vectors = np.vstack(rows) if rows else np.zeros((0, dim))
    return EmbeddingSet(words, vectors, normalized=False, binary_newlines=newlines)


def save_word2vec_binary(emb: EmbeddingSet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n".encode("ascii"))
        single = emb.vectors.astype("<f4")
        terminator = b"\n" if emb.binary_newlines else b""
        for word, row in zip(emb.vocab, single):
            fh.write(word.encode("utf-8") + b" " + row.tobytes() + terminator)


def _looks_like_header(tokens: list[str]) -> bool:
    if len(tokens) != 2:
        return False
    try:
        int(tokens[0]), int(tokens[1])
    except ValueError:
        return False
    return True


def load_word2vec_text(path) -> EmbeddingSet:
    words: list[str] = []
    rows: list[np.ndarray] = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    start = 0
    if lines and _looks_like_header(lines[0].split()):
        start = 1
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        tokens = line.split()
        if dim is None:
            dim = len(tokens) - 1
            if dim < 1:
                raise FileFormatError(f"{path}:{lineno}: no vector components")
        if len(tokens) != dim + 1:
            raise FileFormatError(
                f"{path}:{lineno}: expected {dim + 1} fields, got {len(tokens)}"
            )
        try:
            rows.append(np.array([float(t) for t in tokens[1:]]))
        except ValueError as exc:
            raise FileFormatError(f"{path}:{lineno}: {exc}") from None
        words.append(tokens[0])
    if dim is None:
        raise FileFormatError(f"{path}: empty embedding file")
    words, rows = _dedupe(words, rows, str(path))
    return EmbeddingSet(words, np.vstack(rows))


def save_word2vec_text(emb: EmbeddingSet, path, header: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(emb)} {emb.dim}\n")
        for word, row in zip(emb.vocab, emb.vectors):
            fh.write(word + " " + " ".join(repr(v) for v in row.tolist()) + "\n")


EMBEDDING_FORMATS = ("bin", "txt")


def load_embeddings(path, fmt: str) -> EmbeddingSet:
    if fmt == "bin":
        return load_word2vec_binary(path)
    if fmt == "txt":
        return load_word2vec_text(path)
    raise ValueError(f"unknown embedding format {fmt!r}; expected one of {EMBEDDING_FORMATS}")


def save_embeddings(emb: EmbeddingSet, path, fmt: str) -> None:
    if fmt == "bin":
        save_word2vec_binary(emb, path)
    elif fmt == "txt":
        save_word2vec_text(emb, path)
    else:
        raise ValueError(f"unknown embedding format {fmt!r}; expected one of {EMBEDDING_FORMATS}")


@dataclass(frozen=True)
class GenderLexicon:
    """Masculine and feminine word lists plus definitional pairs.

    Pairs are (feminine, masculine), e.g. ("she", "he").
    """

    masculine: tuple[str, ...]
    feminine: tuple[str, ...]
    definitional_pairs: tuple[tuple[str, str], ...] = (("she", "he"),)

    def __post_init__(self):
        if not self.masculine or not self.feminine:
            raise ValueError("both lexicon word lists must be non-empty")
        overlap = set(self.masculine) & set(self.feminine)
        if overlap:
            raise ValueError(f"lexicon lists overlap: {sorted(overlap)[:10]}")


@dataclass(frozen=True)
class WeatSpec:
    """Two target word sets and two attribute word sets."""

    target_x: tuple[str, ...]
    target_y: tuple[str, ...]
    attribute_a: tuple[str, ...]
    attribute_b: tuple[str, ...]
    name: str = ""

    def __post_init__(self):
        for label, words in (
            ("target_x", self.target_x),
            ("target_y", self.target_y),
            ("attribute_a", self.attribute_a),
            ("attribute_b", self.attribute_b),
        ):
            if not words:
                raise ValueError(f"WEAT set {label} is empty")


def load_word_sections(path) -> dict[str, list]:
    """Named word lists from a JSON object or a sectioned text file.

    Text files use "[section]" headers with one word per line; '#' starts
    a comment; words before any header land in the "" section. JSON files
    are an object of named arrays (entries may themselves be pairs, as in
    a lexicon's definitional pairs).
    """
    with open(path, "r", encoding="utf-8") as fh:
        content = fh.read()
    if content.lstrip().startswith("{"):
        try:
            doc = json.loads(content)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise FileFormatError(f"{path}: JSON word lists must be an object")
        out: dict[str, list] = {}
        for key, value in doc.items():
            if not isinstance(value, list):
                raise FileFormatError(f"{path}: section {key!r} must be an array")
            out[str(key)] = list(value)
        return out
    sections: dict[str, list] = {}
    current = ""
    for raw in content.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, [])
            continue
        sections.setdefault(current, []).append(line)
    return sections


def load_word_list(path) -> list[str]:
    """A flat word list: JSON array, JSON object (flattened), or text."""
    with open(path, "r", encoding="utf-8") as fh:
        content = fh.read()
    stripped = content.lstrip()
    if stripped.startswith("[") and stripped.rstrip().endswith("]") and '"' in stripped:
        try:
            doc = json.loads(content)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: invalid JSON: {exc}") from None
        if not all(isinstance(w, str) for w in doc):
            raise FileFormatError(f"{path}: JSON word list must contain only strings")
        return list(doc)
    sections: dict[str, list] = {}
    current = ""
    for raw in content.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, [])
            continue
        sections.setdefault(current, []).append(line)
    out: list[str] = []
    for words in sections.values():
        out.extend(w for w in words if w not in out)
    return out


def _section(sections: dict[str, list[str]], *names: str) -> list[str] | None:
    for name in names:
        for key in sections:
            if key.lower().replace("-", "_") == name:
                return sections[key]
    return None


def load_gender_lexicon(path) -> GenderLexicon:
    """Lexicon from JSON keys or text sections masculine/feminine/pairs."""
    sections = load_word_sections(path)
    masculine = _section(sections, "masculine", "masc", "male")
    feminine = _section(sections, "feminine", "fem", "female")
    if masculine is None or feminine is None:
        raise FileFormatError(
            f"{path}: lexicon needs 'masculine' and 'feminine' sections "
            f"(found {sorted(sections)})"
        )
    pairs_raw = _section(sections, "pairs", "definitional_pairs") or []
    pairs: list[tuple[str, str]] = []
    for entry in pairs_raw:
        if isinstance(entry, (list, tuple)) and len(entry) == 2:
            pairs.append((str(entry[0]), str(entry[1])))
            continue
        sep = "," if "," in entry else None
        halves = [h.strip() for h in str(entry).split(sep)]
        if len(halves) != 2:
            raise FileFormatError(f"{path}: malformed definitional pair {entry!r}")
        pairs.append((halves[0], halves[1]))
    if not pairs:
        pairs = [("she", "he")]
    return GenderLexicon(tuple(masculine), tuple(feminine), tuple(pairs))


def load_weat_spec(path) -> WeatSpec:
    sections = load_word_sections(path)
    sets = {}
    for canonical, aliases in (
        ("target_x", ("target_x", "x")),
        ("target_y", ("target_y", "y")),
        ("attribute_a", ("attribute_a", "a")),
        ("attribute_b", ("attribute_b", "b")),
    ):
        found = _section(sections, *aliases)
        if found is None:
            raise FileFormatError(
                f"{path}: WEAT spec needs section {canonical!r} (found {sorted(sections)})"
            )
        sets[canonical] = tuple(found)
    name = (_section(sections, "name") or [""])[0]
    return WeatSpec(name=name, **sets)
