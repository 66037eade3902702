"""Feature extraction from image folders into the plagiart dataset format."""

from plag_extractor.extract import ExtractionJob, extract

__all__ = ["ExtractionJob", "extract"]
