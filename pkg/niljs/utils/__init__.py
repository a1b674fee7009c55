from .logger import RunArtifacts, dump_json

__all__ = ["RunArtifacts", "dump_json"]
