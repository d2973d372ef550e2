"""CityJSON 1.1 schema constraints, embedded for offline validation.

Transcribes the structural rules of the published CityJSON 1.1 schema for
the document subset a LoD1 model uses (type/version/transform/vertices/
metadata/CityObjects with Building + Solid geometry), plus the semantic
checks that plain JSON Schema cannot express (vertex indices in range,
ring sanity).
"""

CITYJSON_11_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["type", "version", "transform", "CityObjects", "vertices"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "CityJSON"},
        "version": {"type": "string", "pattern": "^1\\.1$"},
        "extensions": {"type": "object"},
        "transform": {
            "type": "object",
            "required": ["scale", "translate"],
            "additionalProperties": False,
            "properties": {
                "scale": {"type": "array", "items": {"type": "number"},
                          "minItems": 3, "maxItems": 3},
                "translate": {"type": "array", "items": {"type": "number"},
                              "minItems": 3, "maxItems": 3},
            },
        },
        "metadata": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "geographicalExtent": {"type": "array", "items": {"type": "number"},
                                       "minItems": 6, "maxItems": 6},
                "identifier": {"type": "string"},
                "pointOfContact": {"type": "object"},
                "referenceDate": {"type": "string"},
                "referenceSystem": {"type": "string"},
                "title": {"type": "string"},
            },
        },
        "CityObjects": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["type"],
                "properties": {
                    "type": {"type": "string"},
                    "attributes": {"type": "object"},
                    "children": {"type": "array", "items": {"type": "string"}},
                    "parents": {"type": "array", "items": {"type": "string"}},
                    "geographicalExtent": {"type": "array",
                                           "items": {"type": "number"},
                                           "minItems": 6, "maxItems": 6},
                    "geometry": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["type", "lod", "boundaries"],
                            "properties": {
                                "type": {"enum": ["Solid", "MultiSurface",
                                                  "CompositeSurface", "MultiPoint",
                                                  "MultiLineString", "MultiSolid",
                                                  "CompositeSolid"]},
                                "lod": {"type": "string",
                                        "pattern": "^(\\d\\.)?(\\d)$"},
                                "boundaries": {"type": "array"},
                                "semantics": {"type": "object"},
                                "material": {"type": "object"},
                                "texture": {"type": "object"},
                            },
                        },
                    },
                },
            },
        },
        "vertices": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer"},
                      "minItems": 3, "maxItems": 3},
        },
        "appearance": {"type": "object"},
        "geometry-templates": {"type": "object"},
    },
}


def semantic_errors(doc: dict) -> list:
    """Constraint checks beyond the schema: solid nesting depth, index
    bounds, ring arity, Building rules."""
    problems = []
    n_vertices = len(doc.get("vertices", []))
    for vid, vertex in enumerate(doc.get("vertices", [])):
        if not all(isinstance(c, int) for c in vertex):
            problems.append(f"vertex {vid} has non-integer coordinates")
    for oid, obj in doc.get("CityObjects", {}).items():
        if obj["type"] not in ("Building", "BuildingPart", "BuildingRoom",
                               "BuildingStorey", "BuildingUnit",
                               "BuildingInstallation", "BuildingConstructiveElement"):
            problems.append(f"{oid}: unexpected CityObject type {obj['type']}")
        for geom in obj.get("geometry", []):
            if geom["type"] != "Solid":
                continue
            for shell in geom["boundaries"]:
                for surface in shell:
                    for ring in surface:
                        if len(ring) < 3:
                            problems.append(f"{oid}: ring with {len(ring)} vertices")
                        if len(set(ring)) != len(ring):
                            problems.append(f"{oid}: repeated vertex in ring")
                        for idx in ring:
                            if not isinstance(idx, int) or not (0 <= idx < n_vertices):
                                problems.append(f"{oid}: vertex index {idx} out of range")
    return problems


def validate_cityjson(doc: dict):
    """jsonschema validation + semantic checks; raises on any problem."""
    import jsonschema
    jsonschema.validate(doc, CITYJSON_11_SCHEMA)
    problems = semantic_errors(doc)
    if problems:
        raise AssertionError("CityJSON semantic errors: " + "; ".join(problems))
