import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

from app.common.errors import InvalidBodySpec
from app.convex.bodies import ConvexBody
from app.convex.models import BodySpec
from app.settings import S


@dataclass(frozen=True)
class BodyEntry:
    key: str
    description: str
    spec: BodySpec


_REGISTRY: Optional[Dict[str, BodyEntry]] = None


def _resolve_registry_path() -> str:
    registry_path = S.body_registry_path
    if os.path.isabs(registry_path):
        return registry_path
    local = os.path.join(os.getcwd(), registry_path)
    if os.path.exists(local):
        return local
    # fall back to the copy shipped inside the package
    return os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "bodies.json")


def load_registry() -> Dict[str, BodyEntry]:
    global _REGISTRY
    if _REGISTRY is not None:
        return _REGISTRY

    registry_path = _resolve_registry_path()
    if not os.path.exists(registry_path):
        raise RuntimeError(f"Body registry not found at {registry_path}")

    with open(registry_path, "r", encoding="utf-8") as f:
        data = json.load(f)

    bodies = data.get("bodies")
    if not isinstance(bodies, dict) or not bodies:
        raise RuntimeError("Body registry must define a non-empty 'bodies' object")

    out: Dict[str, BodyEntry] = {}
    for key, info in bodies.items():
        key = str(key).strip().lower()
        if len(key) < 2:
            raise RuntimeError(f"Body key '{key}' is too short")
        if not isinstance(info, dict) or "spec" not in info:
            raise RuntimeError(f"Body '{key}' must be an object with a 'spec'")
        try:
            spec = BodySpec.parse(info["spec"])
        except InvalidBodySpec as e:
            raise RuntimeError(f"Body '{key}' has an invalid spec: {e}") from e
        out[key] = BodyEntry(key=key, description=str(info.get("description") or ""), spec=spec)

    _REGISTRY = out
    return out


def resolve_spec(ref: Union[str, Dict[str, Any], BodySpec]) -> BodySpec:
    """Preset name, path to a JSON file, inline JSON text or an already parsed object."""
    if isinstance(ref, BodySpec):
        return ref
    if isinstance(ref, dict):
        return BodySpec.parse(ref)

    text = str(ref).strip()
    registry = load_registry()
    if text.lower() in registry:
        return registry[text.lower()].spec
    if text.startswith("{"):
        try:
            return BodySpec.parse(json.loads(text))
        except json.JSONDecodeError as e:
            raise InvalidBodySpec(f"inline body spec is not valid JSON: {e.msg}") from e
    if os.path.exists(text):
        with open(text, "r", encoding="utf-8") as f:
            try:
                return BodySpec.parse(json.load(f))
            except json.JSONDecodeError as e:
                raise InvalidBodySpec(f"{text} is not valid JSON: {e.msg}") from e
    raise InvalidBodySpec(f"'{text}' is neither a preset ({sorted(registry)}), a JSON file nor inline JSON")


def resolve_body(ref: Union[str, Dict[str, Any], BodySpec]) -> Tuple[ConvexBody, BodySpec]:
    spec = resolve_spec(ref)
    return spec.to_body(), spec
