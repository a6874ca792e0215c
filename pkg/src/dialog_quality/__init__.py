"""Dialog quality workbench.

Ingests task-oriented dialog logs, segments them into sessions, aggregates
per-turn defect scores into dialog-level baselines, trains a dialog-level
defect classifier on annotated data, and hosts the annotation workflow that
produces those labels.
"""

__version__ = "0.1.0"
