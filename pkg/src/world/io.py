"""
JSON / JSON-Lines persistence for the vocabulary, scene splits and dialogue archives
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from src.errors import ConfigError, DependencyError, SceneParseError
from src.models.schemas import CategoryVocabulary, Scene

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def write_jsonl(path: Union[str, Path], records: Iterable[BaseModel]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(record.model_dump_json())
            f.write("\n")
            count += 1
    logger.debug(f"Wrote {count} records to {path}")
    return count


def read_jsonl(path: Union[str, Path], model: Type[ModelT]) -> List[ModelT]:
    """
    Parse one model per non-blank line

    Raises:
        DependencyError: file missing
        SceneParseError: malformed line, reported with its 1-based line number
    """
    path = Path(path)
    if not path.is_file():
        raise DependencyError(f"Missing data file: {path}", missing=str(path))
    records: List[ModelT] = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                records.append(model.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as e:
                raise SceneParseError(f"{path}:{number}: malformed {model.__name__}: {e}", line_number=number) from e
    return records


def write_scenes(path: Union[str, Path], scenes: Iterable[Scene]) -> int:
    return write_jsonl(path, scenes)


def read_scenes(path: Union[str, Path]) -> List[Scene]:
    return read_jsonl(path, Scene)


def write_vocabulary(path: Union[str, Path], vocab: CategoryVocabulary) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(vocab.model_dump_json(indent=2), encoding="utf-8")


def read_vocabulary(path: Union[str, Path]) -> CategoryVocabulary:
    path = Path(path)
    if not path.is_file():
        raise DependencyError(f"Missing world file: {path} (run 'generate' first)", missing=str(path))
    try:
        return CategoryVocabulary.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"Invalid world file {path}: {e}") from e
