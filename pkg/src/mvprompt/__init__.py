"""mvprompt: multi-view scoring and keyword recommendation engine for text-to-3D prompt engineering."""

__version__ = "0.1.0"
