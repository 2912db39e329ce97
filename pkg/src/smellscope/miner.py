"""Repository search and acquisition against a GitHub-style REST API.

The selection pipeline is: keyword search restricted to a language, ranked
by stars, filtered to recently pushed repositories. Results go to a
JSON-lines candidate file for manual curation; curated repositories are
then downloaded as archives (no history) for scanning.

All HTTP goes through a ``requests``-compatible session, so recorded
transcripts can be replayed with :class:`ReplaySession`.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import os
import shutil
import tarfile
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path, PurePosixPath
from urllib.parse import parse_qsl, urlencode, urlsplit

import requests

log = logging.getLogger(__name__)

DEFAULT_API_URL = "https://api.github.com"
TOKEN_ENV = "GITHUB_TOKEN"
REVISION_MARKER = ".smellscope-revision"
ACTIVE_WINDOW_DAYS = 730  # roughly 24 months


class MinerError(Exception):
    pass


class CredentialError(MinerError):
    pass


class TransientError(MinerError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class ProtocolError(MinerError):
    pass


def default_pushed_after(today: date | None = None) -> date:
    return (today or date.today()) - timedelta(days=ACTIVE_WINDOW_DAYS)


@dataclass
class RepoQuery:
    keywords: list[str]
    language: str = "Python"
    min_stars: int = 0
    pushed_after: date | None = field(default_factory=default_pushed_after)
    max_results: int = 20
    per_page: int = 100

    def __post_init__(self):
        if self.max_results <= 0:
            raise ValueError("max_results must be positive")
        if not self.keywords or not any(k.strip() for k in self.keywords):
            raise ValueError("at least one keyword is required")
        if not 1 <= self.per_page <= 100:
            raise ValueError("per_page must be between 1 and 100")

    def search_string(self) -> str:
        terms = [k if " " not in k else f'"{k}"' for k in self.keywords if k.strip()]
        if self.language:
            terms.append(f"language:{self.language}")
        if self.min_stars > 0:
            terms.append(f"stars:>={self.min_stars}")
        if self.pushed_after:
            terms.append(f"pushed:>={self.pushed_after.isoformat()}")
        return " ".join(terms)


@dataclass(frozen=True)
class RepoDescriptor:
    full_name: str
    clone_url: str
    stars: int
    last_push: datetime
    default_branch: str = "main"

    @property
    def revision(self) -> str:
        return f"{self.default_branch}@{self.last_push.isoformat()}"

    def to_candidate(self) -> dict:
        return {
            "full_name": self.full_name,
            "stars": self.stars,
            "clone_url": self.clone_url,
            "last_push": self.last_push.isoformat().replace("+00:00", "Z"),
        }


def _parse_time(value: str) -> datetime:
    stamp = datetime.fromisoformat(value.replace("Z", "+00:00"))
    return stamp if stamp.tzinfo else stamp.replace(tzinfo=timezone.utc)


def descriptor_from_item(item: dict) -> RepoDescriptor:
    try:
        stars = int(item["stargazers_count"])
        if stars < 0:
            raise ValueError("negative star count")
        return RepoDescriptor(
            full_name=item["full_name"],
            clone_url=item["clone_url"],
            stars=stars,
            last_push=_parse_time(item["pushed_at"]),
            default_branch=item.get("default_branch") or "main",
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed repository entry: {exc!r}") from None


class GitHubClient:
    def __init__(
        self,
        api_url: str = DEFAULT_API_URL,
        token: str | None = None,
        session=None,
        max_retries: int = 4,
        backoff: float = 2.0,
        sleep=time.sleep,
        timeout: float = 30.0,
    ):
        self.api_url = api_url.rstrip("/")
        self.token = token if token is not None else os.environ.get(TOKEN_ENV)
        self.session = session if session is not None else requests.Session()
        self.max_retries = max_retries
        self.backoff = backoff
        self.sleep = sleep
        self.timeout = timeout

    def _headers(self) -> dict:
        headers = {"Accept": "application/vnd.github+json", "User-Agent": "smellscope"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _get(self, url: str, params: dict | None = None, stream: bool = False):
        attempt = 0
        while True:
            try:
                resp = self.session.get(
                    url, params=params, headers=self._headers(), timeout=self.timeout, stream=stream
                )
            except requests.RequestException as exc:
                raise TransientError(f"network failure: {exc}") from None
            if resp.status_code == 401:
                raise CredentialError(f"authentication failed for {url} (check ${TOKEN_ENV})")
            limited = resp.status_code == 429 or (
                resp.status_code == 403
                and (resp.headers.get("X-RateLimit-Remaining") == "0" or "Retry-After" in resp.headers)
            )
            if limited:
                wait = self._retry_after(resp, attempt)
                if attempt >= self.max_retries:
                    raise TransientError(f"rate limit still exhausted after {attempt} retries", wait)
                log.warning("rate limited; retrying in %.1fs", wait)
                self.sleep(wait)
                attempt += 1
                continue
            if resp.status_code == 403:
                raise CredentialError(f"access denied for {url}")
            if resp.status_code >= 500:
                raise TransientError(f"server error {resp.status_code} for {url}")
            if resp.status_code >= 400:
                raise ProtocolError(f"unexpected status {resp.status_code} for {url}")
            return resp

    def _retry_after(self, resp, attempt: int) -> float:
        if "Retry-After" in resp.headers:
            try:
                return float(resp.headers["Retry-After"])
            except ValueError:
                pass
        reset = resp.headers.get("X-RateLimit-Reset")
        if reset:
            try:
                return max(0.0, float(reset) - time.time())
            except ValueError:
                pass
        return self.backoff * (2**attempt)

    def search(self, query: RepoQuery) -> list[RepoDescriptor]:
        """Sequential paginated search, stars descending, filtered and truncated."""
        per_page = min(query.per_page, query.max_results)
        url = f"{self.api_url}/search/repositories"
        params: dict | None = {
            "q": query.search_string(),
            "sort": "stars",
            "order": "desc",
            "per_page": per_page,
            "page": 1,
        }
        collected: list[RepoDescriptor] = []
        while url and len(collected) < query.max_results:
            resp = self._get(url, params)
            try:
                payload = resp.json()
                items = payload["items"]
                if not isinstance(items, list):
                    raise TypeError("items is not a list")
            except (ValueError, KeyError, TypeError) as exc:
                raise ProtocolError(f"malformed search response: {exc!r}") from None
            for item in items:
                desc = descriptor_from_item(item)
                if desc.stars < query.min_stars:
                    continue
                if query.pushed_after and desc.last_push.date() < query.pushed_after:
                    continue
                collected.append(desc)
            next_link = getattr(resp, "links", {}).get("next", {}).get("url")
            if next_link:
                url, params = next_link, None
            elif len(items) < per_page:
                url = None
            else:
                params = dict(params or {}, page=(params or {}).get("page", 1) + 1)
        collected.sort(key=lambda d: (-d.stars, d.full_name))
        return collected[: query.max_results]

    def acquire(self, repo: RepoDescriptor, dest: str | Path) -> Path:
        """Download and unpack the default-branch archive into ``dest``.

        A marker file records the revision; a second call for the same
        revision returns without touching the network.
        """
        dest = Path(dest)
        marker = dest / REVISION_MARKER
        if marker.is_file() and marker.read_text(encoding="utf-8").strip() == repo.revision:
            return dest
        url = f"{self.api_url}/repos/{repo.full_name}/tarball/{repo.default_branch}"
        resp = self._get(url, stream=True)
        try:
            dest.parent.mkdir(parents=True, exist_ok=True)
            staging = Path(tempfile.mkdtemp(prefix=".acquire-", dir=dest.parent))
        except OSError as exc:
            raise MinerError(f"destination not writable: {dest}: {exc.strerror or exc}") from None
        try:
            extract_archive(resp.content, staging)
            (staging / REVISION_MARKER).write_text(repo.revision + "\n", encoding="utf-8")
            if dest.exists():
                shutil.rmtree(dest)
            staging.rename(dest)
        except OSError as exc:
            raise MinerError(f"cannot materialize {repo.full_name} at {dest}: {exc}") from None
        finally:
            if staging.exists():
                shutil.rmtree(staging, ignore_errors=True)
        return dest


def extract_archive(data: bytes, dest: Path) -> list[str]:
    """Unpack a gzipped tarball, dropping its single top-level folder.

    Members escaping ``dest`` and non-regular entries are ignored.
    """
    written = []
    try:
        tar = tarfile.open(fileobj=io.BytesIO(data), mode="r:*")
    except tarfile.TarError as exc:
        raise ProtocolError(f"not a tar archive: {exc}") from None
    with tar:
        for member in tar.getmembers():
            name = PurePosixPath(member.name)
            if name.is_absolute() or ".." in name.parts:
                continue
            if len(name.parts) < 2 or not (member.isfile() or member.isdir()):
                continue
            rel = PurePosixPath(*name.parts[1:])
            target = dest.joinpath(*rel.parts)
            if member.isdir():
                target.mkdir(parents=True, exist_ok=True)
                continue
            target.parent.mkdir(parents=True, exist_ok=True)
            src = tar.extractfile(member)
            with open(target, "wb") as out:
                shutil.copyfileobj(src, out)
            written.append(rel.as_posix())
    return sorted(written)


def acquire_all(client: GitHubClient, repos, dest_root: str | Path, workers: int = 4) -> list[Path]:
    dest_root = Path(dest_root)
    targets = [dest_root / r.full_name.replace("/", "__") for r in repos]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(client.acquire, repos, targets))


def emit_candidates(descriptors, path: str | Path) -> Path:
    """Write one JSON object per line, in the given order."""
    path = Path(path)
    lines = [json.dumps(d.to_candidate(), ensure_ascii=False) + "\n" for d in descriptors]
    path.write_text("".join(lines), encoding="utf-8")
    return path


def read_candidates(path: str | Path) -> list[RepoDescriptor]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            out.append(RepoDescriptor(d["full_name"], d["clone_url"], d["stars"], _parse_time(d["last_push"])))
    return out


class ReplaySession:
    """Serves recorded HTTP exchanges in place of the network.

    A transcript is a JSON list of ``{"request": {"path", "params"},
    "response": {"status", "headers", "json" | "body_b64"}}``. Requests are
    matched by path and query parameters; an unmatched request raises
    ``requests.ConnectionError`` just as an unreachable host would.
    """

    def __init__(self, exchanges: list[dict]):
        self.exchanges = exchanges
        self.calls: list[tuple[str, dict]] = []

    @classmethod
    def from_file(cls, path: str | Path) -> ReplaySession:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    @staticmethod
    def _normalize(params: dict) -> dict:
        return {str(k): str(v) for k, v in params.items()}

    def get(self, url, params=None, headers=None, timeout=None, stream=False):
        parts = urlsplit(url)
        query = dict(parse_qsl(parts.query))
        query.update(params or {})
        query = self._normalize(query)
        self.calls.append((parts.path, query))
        for ex in self.exchanges:
            req = ex["request"]
            if req["path"] == parts.path and self._normalize(req.get("params", {})) == query:
                return self._build(ex["response"], url, query)
        raise requests.ConnectionError(f"no recorded response for {parts.path}?{urlencode(query)}")

    @staticmethod
    def _build(reply: dict, url: str, query: dict) -> requests.Response:
        resp = requests.Response()
        resp.status_code = reply.get("status", 200)
        resp.headers.update(reply.get("headers", {}))
        if "body_b64" in reply:
            resp._content = base64.b64decode(reply["body_b64"])
        else:
            resp._content = json.dumps(reply.get("json")).encode("utf-8")
        resp.url = url if not query else f"{url.split('?')[0]}?{urlencode(query)}"
        return resp
