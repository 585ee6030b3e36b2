"""
Staged output directories.

Every file of a command is written into a hidden staging directory next to
the target and the staging directory is moved into place only after all
writes succeeded. A failed command therefore leaves no partial output.
"""
import os as sync_os
import uuid as uuid_mod
from pathlib import Path
from types import TracebackType
from typing import Any

import aiofiles
import orjson
from aiofiles import os as async_os
from loguru import logger as l

from regime_swk import meta_config
from regime_swk.models.exceptions import ArtifactIOError

JSON_OPTIONS: int = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_NON_STR_KEYS | orjson.OPT_SERIALIZE_NUMPY


def dumps_json(payload: Any) -> bytes:
    """Deterministic JSON bytes (sorted keys, two-space indent, trailing newline)."""
    return orjson.dumps(payload, option=JSON_OPTIONS) + b"\n"


def loads_json(path: Path | str) -> Any:
    try:
        with open(path, 'rb') as f:
            return orjson.loads(f.read())
    except (OSError, orjson.JSONDecodeError) as e:
        raise ArtifactIOError(str(path), f"Cannot read JSON ({e})") from e


class ArtifactStage:
    """
    Async context manager collecting the files of one output directory.

    Usage::

        async with ArtifactStage(out) as stage:
            await stage.write_text("prices.csv", text)
            await stage.write_json("manifest.json", manifest)
    """

    def __init__(self, out: Path | str):
        self.out = Path(out)
        token = uuid_mod.uuid4().hex[:12]
        self.staging = self.out.parent / f".{self.out.name}.{token}.staging"
        self._backup = self.out.parent / f".{self.out.name}.{token}.old"
        self.written: list[str] = []

    async def __aenter__(self) -> 'ArtifactStage':
        try:
            await async_os.makedirs(self.staging)
        except OSError as e:
            raise ArtifactIOError(str(self.out), f"Output directory is not writable ({e.strerror})") from e
        l.debug(f"Staging artifacts in {self.staging}")
        return self

    async def __aexit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        if exc_type is not None:
            await self._remove_dir(self.staging)
            return
        try:
            await self._commit()
        except OSError as e:
            await self._remove_dir(self.staging)
            raise ArtifactIOError(str(self.out), f"Cannot move artifacts into place ({e.strerror})") from e
        l.success(f"Wrote {len(self.written)} file(s) to {self.out}")

    async def write_bytes(self, name: str, payload: bytes) -> Path:
        path = self.staging / name
        try:
            async with aiofiles.open(path, 'wb') as f:
                await f.write(payload)
        except OSError as e:
            raise ArtifactIOError(str(self.out / name), f"Cannot write artifact ({e.strerror})") from e
        self.written.append(name)
        return self.out / name

    async def write_text(self, name: str, text: str) -> Path:
        return await self.write_bytes(name, text.encode('utf-8'))

    async def write_json(self, name: str, payload: Any) -> Path:
        return await self.write_bytes(name, dumps_json(payload))

    async def _commit(self) -> None:
        if await async_os.path.exists(self.out):
            await async_os.rename(self.out, self._backup)
            await async_os.rename(self.staging, self.out)
            await self._remove_dir(self._backup)
        else:
            await async_os.rename(self.staging, self.out)

    @staticmethod
    async def _remove_dir(path: Path) -> None:
        """Remove a flat directory of files; errors are logged, not raised."""
        try:
            for name in await async_os.listdir(path):
                await async_os.remove(sync_os.path.join(path, name))
            await async_os.rmdir(path)
            l.debug(f"Removed {path}")
        except FileNotFoundError:
            l.debug(f"Already removed: {path}")
        except OSError as e:
            l.error(f"Failed to remove {path}: {e}")


def manifest(command: str, config: dict[str, Any], **extra: Any) -> dict[str, Any]:
    """Manifest body shared by every command: artifact version, command and config echo."""
    return {
        'artifact_version': meta_config.ARTIFACT_VERSION,
        'command': command,
        'config': config,
        **extra,
    }
