"""Pipeline manifest: a small versioned JSON file naming every artifact the
scrubber needs. Relative paths resolve against the manifest's directory.

    {"version": 1, "model": "model.crf", "pattern_table": null,
     "placeholder_map": null, "abbreviations": null,
     "chunk_char_limit": 100000, "enabled_labels": null}
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

from .crf import CrfModel
from .exceptions import InvalidConfig, ModelFormatError, ModelNotLoaded
from .labels import DEFAULT_ENABLED_LABELS
from .regex_phi import PatternTable, default_pattern_table
from .scrub import DEFAULT_PLACEHOLDERS, ScrubConfig, ScrubPipeline, load_placeholder_map
from .tokenization import DEFAULT_ABBREVIATIONS, load_abbreviations

MANIFEST_VERSION = 1
_PATH_FIELDS = ("model", "pattern_table", "placeholder_map", "abbreviations")


@dataclass(frozen=True)
class PipelineManifest:
    model: Optional[str] = None
    pattern_table: Optional[str] = None
    placeholder_map: Optional[str] = None
    abbreviations: Optional[str] = None
    chunk_char_limit: int = 100_000
    enabled_labels: Optional[tuple] = None
    replacement_mode: str = "PLACEHOLDER"
    version: int = MANIFEST_VERSION

    @classmethod
    def read(cls, path) -> "PipelineManifest":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError) as exc:
            raise InvalidConfig(f"cannot read manifest {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise InvalidConfig(f"{path}: manifest must be a JSON object")
        if raw.get("version") != MANIFEST_VERSION:
            raise InvalidConfig(f"{path}: unsupported manifest version {raw.get('version')!r}")
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"{path}: unknown manifest keys {sorted(unknown)}")
        for key in _PATH_FIELDS:
            if raw.get(key) is not None:
                raw[key] = str((path.parent / raw[key]).resolve())
        if raw.get("enabled_labels") is not None:
            raw["enabled_labels"] = tuple(raw["enabled_labels"])
        return cls(**raw)

    def write(self, path) -> None:
        path = Path(path)
        d = asdict(self)
        for key in _PATH_FIELDS:
            if d[key] is not None:
                p = Path(d[key]).resolve()
                try:
                    d[key] = str(p.relative_to(path.parent.resolve()))
                except ValueError:
                    d[key] = str(p)
        if d["enabled_labels"] is not None:
            d["enabled_labels"] = list(d["enabled_labels"])
        path.write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")

    def with_overrides(self, **kw) -> "PipelineManifest":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def scrub_config(self) -> ScrubConfig:
        pmap = DEFAULT_PLACEHOLDERS
        if self.placeholder_map:
            pmap = _load(load_placeholder_map, self.placeholder_map, "placeholder map")
        abbrevs = DEFAULT_ABBREVIATIONS
        if self.abbreviations:
            abbrevs = _load(load_abbreviations, self.abbreviations, "abbreviation list")
        labels = DEFAULT_ENABLED_LABELS if self.enabled_labels is None else self.enabled_labels
        try:
            return ScrubConfig(placeholder_map=pmap, chunk_char_limit=self.chunk_char_limit,
                               enabled_labels=labels, abbreviations=abbrevs,
                               replacement_mode=self.replacement_mode,
                               max_sentence_chars=min(5_000, self.chunk_char_limit))
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None

    def pattern_table_obj(self) -> PatternTable:
        if not self.pattern_table:
            return default_pattern_table()
        return _load(PatternTable.from_file, self.pattern_table, "pattern table")

    def load_model(self) -> CrfModel:
        if not self.model:
            raise ModelNotLoaded("no model path given (manifest 'model' or --model)")
        try:
            return CrfModel.load(self.model)
        except FileNotFoundError:
            raise ModelNotLoaded(f"model file not found: {self.model}") from None
        except (OSError, UnicodeDecodeError) as exc:
            raise ModelNotLoaded(f"cannot read model {self.model}: {exc}") from None
        except ModelFormatError as exc:
            raise ModelNotLoaded(str(exc)) from None

    def load(self) -> ScrubPipeline:
        """Resolve everything; configuration errors surface before the model loads."""
        config = self.scrub_config()
        table = self.pattern_table_obj()
        return ScrubPipeline(self.load_model(), table, config)


def _load(fn, path, what):
    try:
        return fn(path)
    except FileNotFoundError:
        raise InvalidConfig(f"{what} not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InvalidConfig(f"cannot read {what} {path}: {exc}") from None
