"""
JSONValidator Primitive

Validates JSON data against schemas using jsonschema library.
Provides predefined schemas for the pipeline config, conditioning files,
dataset splits and run manifests.
"""

from typing import Any

from jsonschema import Draft7Validator


def _range_pair(minimum: float, maximum: float | None = None, integer: bool = False) -> dict:
    """Schema for a [min, max] pair of numbers."""
    item: dict[str, Any] = {"type": "integer" if integer else "number", "minimum": minimum}
    if maximum is not None:
        item["maximum"] = maximum
    return {"type": "array", "items": item, "minItems": 2, "maxItems": 2}


def _per_facies(item: dict) -> dict:
    """Schema for a mud/levee/channel triple."""
    return {"type": "array", "items": item, "minItems": 3, "maxItems": 3}


_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_FRACTION = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

_POINT_SCHEMA = {
    "type": "object",
    "properties": {
        "i": {"type": "integer", "minimum": 0},
        "j": {"type": "integer", "minimum": 0},
        "facies": {"type": "integer", "enum": [0, 1, 2]},
    },
    "required": ["i", "j", "facies"],
    "additionalProperties": False,
}

_WELL_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "i": {"type": "integer", "minimum": 0},
        "j": {"type": "integer", "minimum": 0},
        "kind": {"type": "string", "enum": ["injector", "producer"]},
        "bhp": _POSITIVE,
    },
    "required": ["name", "i", "j", "kind"],
    "additionalProperties": False,
}

_PRIOR_ROW_SCHEMA = {
    "type": "object",
    "properties": {
        "mean": {"type": "number"},
        "std": _POSITIVE,
        "min": {"type": "number"},
        "max": {"type": "number"},
    },
    "required": ["mean", "std", "min", "max"],
    "additionalProperties": False,
}


class JSONValidator:
    """Validates JSON against schemas"""

    @staticmethod
    def _format_validation_error(error: Any) -> str:
        """
        Format a jsonschema validation error into a readable message

        Args:
            error: ValidationError from jsonschema

        Returns:
            str: Formatted error message with path and details
        """
        path = ".".join(str(p) for p in error.path) if error.path else "root"
        return f"{path}: {error.message}"

    CONDITIONING_SCHEMA = {
        "type": "object",
        "properties": {"points": {"type": "array", "items": _POINT_SCHEMA}},
        "required": ["points"],
        "additionalProperties": False,
    }

    SPLIT_SCHEMA = {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "train": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "val": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "test": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
        "required": ["train", "val", "test"],
    }

    RUN_MANIFEST_SCHEMA = {
        "type": "object",
        "properties": {
            "command": {"type": "string"},
            "config_hash": {"type": "string", "minLength": 8},
            "code_version": {"type": "string"},
            "seeds": {"type": "object"},
            "created_at": {"type": "string"},
            "outputs": {"type": "object"},
            "arguments": {"type": "object"},
        },
        "required": ["command", "config_hash", "code_version", "seeds", "created_at", "outputs"],
    }

    PIPELINE_CONFIG_SCHEMA = {
        "type": "object",
        "properties": {
            "seed": {"type": "integer", "minimum": 0},
            "workers": {"type": "integer", "minimum": 1, "maximum": 256},
            "geogen": {
                "type": "object",
                "properties": {
                    "nx": {"type": "integer", "minimum": 8, "maximum": 1024},
                    "ny": {"type": "integer", "minimum": 8, "maximum": 1024},
                    "n_channels": _range_pair(0, 64, integer=True),
                    "width": _range_pair(1),
                    "amplitude": _range_pair(0),
                    "wavelength": _range_pair(1),
                    "orientation": _range_pair(-3.1416, 3.1416),
                    "levee_halfwidth": _range_pair(0),
                    "retry_budget": {"type": "integer", "minimum": 1},
                    "repair_attempts": {"type": "integer", "minimum": 0},
                    "n_total": {"type": "integer", "minimum": 10},
                    "split": {
                        "type": "array",
                        "items": {"type": "number", "minimum": 0, "maximum": 1},
                        "minItems": 3,
                        "maxItems": 3,
                    },
                    "conditioning": {
                        "oneOf": [{"type": "null"}, {"type": "array", "items": _POINT_SCHEMA}]
                    },
                },
                "additionalProperties": False,
            },
            "vae": {
                "type": "object",
                "properties": {
                    "channels": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 1},
                        "minItems": 3,
                        "maxItems": 3,
                    },
                    "latent_channels": {"type": "integer", "minimum": 1},
                    "norm_groups": {"type": "integer", "minimum": 1},
                    "lambda_kl": {"type": "number", "minimum": 0},
                    "lambda_h": {"type": "number", "minimum": 0},
                    "lr": _POSITIVE,
                    "batch_size": {"type": "integer", "minimum": 1},
                    "epochs": {"type": "integer", "minimum": 1},
                    "max_steps": {"type": ["integer", "null"], "minimum": 1},
                },
                "additionalProperties": False,
            },
            "diffusion": {
                "type": "object",
                "properties": {
                    "T": {"type": "integer", "minimum": 1},
                    "beta_1": _FRACTION,
                    "beta_T": _FRACTION,
                    "ddim_steps": {"type": "integer", "minimum": 1},
                    "channels": {"type": "integer", "minimum": 1},
                    "time_embed_dim": {"type": "integer", "minimum": 2},
                    "norm_groups": {"type": "integer", "minimum": 1},
                    "downsample": {"type": "boolean"},
                    "lr": _POSITIVE,
                    "batch_size": {"type": "integer", "minimum": 1},
                    "epochs": {"type": "integer", "minimum": 1},
                    "max_steps": {"type": ["integer", "null"], "minimum": 1},
                    "xi_source": {"type": "string", "enum": ["normal", "encoder"]},
                },
                "additionalProperties": False,
            },
            "flow": {
                "type": "object",
                "properties": {
                    "dx": _POSITIVE,
                    "dy": _POSITIVE,
                    "dz": _POSITIVE,
                    "porosity": _per_facies(_FRACTION),
                    "permeability": _per_facies(_POSITIVE),
                    "mu_w": _POSITIVE,
                    "mu_o": _POSITIVE,
                    "swc": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "sor": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "nw": _POSITIVE,
                    "no": _POSITIVE,
                    "krw_end": _POSITIVE,
                    "kro_end": _POSITIVE,
                    "sw_init": {"type": "number", "minimum": 0, "maximum": 1},
                    "p_init": _POSITIVE,
                    "c_w": {"type": "number", "minimum": 0, "maximum": 0.01},
                    "c_o": {"type": "number", "minimum": 0, "maximum": 0.01},
                    "injector_bhp": _POSITIVE,
                    "producer_bhp": _POSITIVE,
                    "rw": _POSITIVE,
                    "t_end": _POSITIVE,
                    "max_dt": _POSITIVE,
                    "report_interval": {"oneOf": [{"type": "null"}, _POSITIVE]},
                    "wells": {"oneOf": [{"type": "null"}, {"type": "array", "items": _WELL_SCHEMA}]},
                },
                "additionalProperties": False,
            },
            "esmda": {
                "type": "object",
                "properties": {
                    "case": {"type": "integer", "enum": [1, 2]},
                    "ensemble_size": {"type": "integer", "minimum": 2},
                    "alphas": {"type": "array", "items": _POSITIVE, "minItems": 1},
                    "obs_rel_std": _POSITIVE,
                    "obs_abs_floor": {"type": "number", "minimum": 0},
                    "obs_every": _POSITIVE,
                    "obs_until": {"type": "number", "minimum": 0},
                    "n_medoids": {"type": "integer", "minimum": 1},
                    "truth_seed": {"type": "integer", "minimum": 0},
                    "property_priors": {
                        "type": "object",
                        "properties": {
                            "porosity": _per_facies(_PRIOR_ROW_SCHEMA),
                            "log_permeability": _per_facies(_PRIOR_ROW_SCHEMA),
                        },
                        "required": ["porosity", "log_permeability"],
                        "additionalProperties": False,
                    },
                },
                "additionalProperties": False,
            },
            "paths": {
                "type": "object",
                "properties": {
                    "output_dir": {"type": "string", "minLength": 1},
                    "dataset": {"type": ["string", "null"]},
                    "vae_checkpoint": {"type": ["string", "null"]},
                    "ldm_checkpoint": {"type": ["string", "null"]},
                    "true_model": {"type": ["string", "null"]},
                },
                "additionalProperties": False,
            },
        },
        "additionalProperties": False,
    }

    def validate(self, data: dict, schema: dict) -> tuple[bool, list[str]]:
        """
        Validate JSON data against a schema

        Args:
            data: The JSON data to validate
            schema: The JSON schema to validate against

        Returns:
            tuple[bool, list[str]]: (is_valid, error_messages)
                - is_valid: True if valid, False otherwise
                - error_messages: Every violation, sorted by path
        """
        validator = Draft7Validator(schema)
        errors = sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.path])

        if not errors:
            return (True, [])

        return (False, [self._format_validation_error(error) for error in errors])

    def validate_conditioning(self, data: dict) -> tuple[bool, list[str]]:
        """Validate a conditioning file against the predefined schema"""
        return self.validate(data, self.CONDITIONING_SCHEMA)

    def validate_split(self, data: dict) -> tuple[bool, list[str]]:
        """Validate a dataset split file against the predefined schema"""
        return self.validate(data, self.SPLIT_SCHEMA)

    def validate_manifest(self, data: dict) -> tuple[bool, list[str]]:
        """Validate a run manifest against the predefined schema"""
        return self.validate(data, self.RUN_MANIFEST_SCHEMA)

    def validate_pipeline_config(self, data: dict) -> tuple[bool, list[str]]:
        """Validate a (defaults-merged) pipeline config"""
        return self.validate(data, self.PIPELINE_CONFIG_SCHEMA)
