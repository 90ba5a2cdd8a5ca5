"""Document-store repositories for service records.

Each record is one JSON document keyed by its FHIR id. Two backends ship
with the suite: in-memory (default) and a directory of JSON files. Anything
else (a real document database, say) can be plugged in by registering an
opener for its URI scheme.
"""

import json
import os
import threading
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional
from urllib.parse import unquote, urlsplit


class DocumentRepository(ABC):
    """Keyed JSON documents with atomic per-key upsert. No network, ever."""

    @abstractmethod
    def get(self, doc_id: str) -> Optional[Dict[str, Any]]:
        ...

    @abstractmethod
    def put(self, doc_id: str, doc: Dict[str, Any]) -> None:
        ...

    @abstractmethod
    def ids(self) -> List[str]:
        ...

    def all(self) -> List[Dict[str, Any]]:
        docs = []
        for doc_id in self.ids():
            doc = self.get(doc_id)
            if doc is not None:
                docs.append(doc)
        return docs

    def count(self) -> int:
        return len(self.ids())

    def snapshot_bytes(self) -> bytes:
        """Canonical bytes of the whole store, for byte-identity checks."""
        documents = {doc_id: self.get(doc_id) for doc_id in sorted(self.ids())}
        return json.dumps(documents, sort_keys=True, separators=(",", ":")).encode(
            "utf-8"
        )


class MemoryRepository(DocumentRepository):
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._docs: Dict[str, Dict[str, Any]] = {}

    def get(self, doc_id: str) -> Optional[Dict[str, Any]]:
        with self._lock:
            doc = self._docs.get(doc_id)
            return json.loads(json.dumps(doc)) if doc is not None else None

    def put(self, doc_id: str, doc: Dict[str, Any]) -> None:
        with self._lock:
            self._docs[doc_id] = json.loads(json.dumps(doc))

    def ids(self) -> List[str]:
        with self._lock:
            return sorted(self._docs)


class FileRepository(DocumentRepository):
    """One ``<id>.json`` file per document under a directory.

    Writes go through a temp file plus rename, so a concurrent reader never
    sees a torn document; last writer wins on the same id.
    """

    def __init__(self, directory: str) -> None:
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, doc_id: str) -> str:
        # ids match [A-Za-z0-9\-.]{1,64}; the suffix keeps "." and ".." inert
        return os.path.join(self.directory, doc_id + ".json")

    def get(self, doc_id: str) -> Optional[Dict[str, Any]]:
        try:
            with open(self._path(doc_id), "r", encoding="utf-8") as fh:
                return json.load(fh)
        except FileNotFoundError:
            return None

    def put(self, doc_id: str, doc: Dict[str, Any]) -> None:
        path = self._path(doc_id)
        tmp = path + ".tmp"
        with self._lock:
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True)
            os.replace(tmp, path)

    def ids(self) -> List[str]:
        return sorted(
            name[: -len(".json")]
            for name in os.listdir(self.directory)
            if name.endswith(".json") and not name.endswith(".tmp")
        )


_OPENERS: Dict[str, Callable[[str], DocumentRepository]] = {}


def register_repository_scheme(
    scheme: str, opener: Callable[[str], DocumentRepository]
) -> None:
    _OPENERS[scheme] = opener


def open_repository(uri: str) -> DocumentRepository:
    """memory:// or file:///path/to/dir; other schemes must be registered."""
    parts = urlsplit(uri)
    scheme = parts.scheme or "memory"
    if scheme == "memory":
        return MemoryRepository()
    if scheme == "file":
        path = unquote(parts.path)
        if parts.netloc and parts.netloc != "localhost":
            raise ValueError(f"file repository must be local: {uri!r}")
        if not path:
            raise ValueError(f"file repository needs a directory path: {uri!r}")
        return FileRepository(path)
    opener = _OPENERS.get(scheme)
    if opener is None:
        raise ValueError(f"unsupported repository scheme: {scheme!r}")
    return opener(uri)
