"""Feature export from pretrained encoders for the affect analysis toolkit."""

from .export import ExportError, ExportResult, export, skipped_manifest_path
from .requests import ExportRequest, RequestError, RequestItem, load_request_items
from .writer import write_feature_file

__all__ = ["ExportError", "ExportRequest", "ExportResult", "RequestError",
           "RequestItem", "export", "load_request_items",
           "skipped_manifest_path", "write_feature_file"]
