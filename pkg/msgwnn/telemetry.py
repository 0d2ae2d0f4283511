"""OpenTelemetry tracing helpers."""

import logging
import sys

from opentelemetry import trace
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor

logger = logging.getLogger(__name__)

tracer = trace.get_tracer("msgwnn")

_configured = False


def configure_tracing(console: bool = False) -> None:
    """Install an SDK tracer provider; spans go to stderr when ``console`` is set."""
    global _configured
    if _configured or not console:
        return
    provider = TracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
    trace.set_tracer_provider(provider)
    _configured = True
    logger.debug("console span exporter installed")
