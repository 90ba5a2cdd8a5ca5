"""Searchset bundle assembly with paging links."""

from typing import Any, List, Optional, Sequence
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from .types import Bundle, BundleEntry, BundleLink, EntrySearch

PAGE_PARAM = "_page"
COUNT_PARAM = "_count"


class PageOutOfRange(Exception):
    def __init__(self, page_index: int, page_size: int, total: int):
        self.page_index = page_index
        self.page_size = page_size
        self.total = total
        super().__init__(
            f"page {page_index} (size {page_size}) is beyond {total} matches"
        )


def _with_paging(url: str, page_size: int, page_index: int) -> str:
    scheme, netloc, path, query, fragment = urlsplit(url)
    params = [
        (k, v) for k, v in parse_qsl(query, keep_blank_values=True)
        if k not in (PAGE_PARAM, COUNT_PARAM)
    ]
    params.append((COUNT_PARAM, str(page_size)))
    params.append((PAGE_PARAM, str(page_index)))
    return urlunsplit((scheme, netloc, path, urlencode(params), fragment))


def make_searchset(
    matches: Sequence[Any],
    base_url: str,
    page_size: int,
    page_index: int,
    search_url: Optional[str] = None,
) -> Bundle:
    """One page of search matches as a searchset bundle.

    ``total`` always counts the full match set, not the page. Entry fullUrls
    are built from ``base_url``; the self/next links reuse ``search_url`` (the
    original query, so filters survive paging) or fall back to ``base_url``.
    The final page may be empty; asking past it raises PageOutOfRange.
    """
    if page_size < 1:
        raise ValueError("page_size must be >= 1")
    if page_index < 0:
        raise ValueError("page_index must be >= 0")
    total = len(matches)
    offset = page_index * page_size
    if offset > total:
        raise PageOutOfRange(page_index, page_size, total)
    page = list(matches[offset : offset + page_size])

    base = base_url.rstrip("/")
    entries: List[BundleEntry] = []
    for resource in page:
        full_url = None
        resource_id = getattr(resource, "id", None)
        resource_type = getattr(resource, "resource_type", None)
        if resource_id and resource_type:
            full_url = f"{base}/{resource_type}/{resource_id}"
        entries.append(
            BundleEntry(
                full_url=full_url,
                resource=resource,
                search=EntrySearch(mode="match"),
            )
        )

    link_base = search_url or base
    links = [BundleLink(relation="self", url=_with_paging(link_base, page_size, page_index))]
    if offset + page_size < total:
        links.append(
            BundleLink(relation="next", url=_with_paging(link_base, page_size, page_index + 1))
        )
    return Bundle(type="searchset", total=total, link=links, entry=entries)
