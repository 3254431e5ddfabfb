"""The model description language: lexer, parser, checker and evaluator."""
from .diagnostics import Diagnostic, ModelError
from .parser import parse_document, parse_expr

__all__ = ["Diagnostic", "ModelError", "parse_document", "parse_expr"]
