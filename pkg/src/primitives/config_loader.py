"""
ConfigLoader Primitive

Loads JSON configuration files with environment variable substitution and
schema validation. An empty file loads as an empty dict so that every value
falls back to its default.
"""

import json
import os
import re
from typing import Optional, Union

from src.primitives.errors import ConfigError
from src.primitives.file_reader import FileReader
from src.primitives.json_validator import JSONValidator


class ConfigLoader:
    """Loads and validates pipeline configuration files"""

    # Environment variable pattern: ${VAR_NAME}
    ENV_VAR_PATTERN = r"\$\{([^}]+)\}"

    def __init__(self):
        self.file_reader = FileReader()
        self.validator = JSONValidator()

    def load(self, config_path: str, schema: Optional[dict] = None) -> dict:
        """
        Load configuration file with optional validation and env var substitution

        Args:
            config_path: Path to the JSON config file
            schema: Optional JSON schema for validation

        Returns:
            dict: Loaded and processed configuration

        Raises:
            FileNotFoundError: If config file doesn't exist
            ConfigError: If JSON is malformed (with line/column), an env var is
                undefined, or the config fails validation (all violations listed)
        """
        text = self.file_reader.read_text(config_path)
        config = self.parse_text(text, source=config_path)

        config = self._substitute_env_vars(config)

        if schema:
            is_valid, error_messages = self.validator.validate(config, schema)
            if not is_valid:
                raise ConfigError(error_messages)

        return config

    def parse_text(self, text: str, source: str = "<string>") -> dict:
        """
        Parse config text into a dict

        Args:
            text: JSON document (blank text means "all defaults")
            source: Name used in diagnostics

        Returns:
            dict: Parsed configuration

        Raises:
            ConfigError: On malformed JSON or a non-object top level
        """
        if not text.strip():
            return {}
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                [f"{source}: line {e.lineno}, column {e.colno}: malformed JSON ({e.msg})"]
            ) from e
        if not isinstance(data, dict):
            raise ConfigError([f"{source}: top level must be a JSON object"])
        return data

    def _substitute_env_vars(
        self, data: Union[dict, list, str, int, float, bool, None]
    ) -> Union[dict, list, str, int, float, bool, None]:
        """
        Recursively substitute ${VAR_NAME} placeholders in config data

        Raises:
            ConfigError: If environment variable is not defined
        """
        if isinstance(data, dict):
            return {key: self._substitute_env_vars(value) for key, value in data.items()}
        elif isinstance(data, list):
            return [self._substitute_env_vars(item) for item in data]
        elif isinstance(data, str):
            for var_name in re.findall(self.ENV_VAR_PATTERN, data):
                if var_name not in os.environ:
                    raise ConfigError([f"Environment variable '{var_name}' is not defined"])
                data = data.replace(f"${{{var_name}}}", os.environ[var_name])
            return data
        else:
            return data
