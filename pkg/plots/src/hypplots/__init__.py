"""Figure generation from the flow solver's CSV/JSON artifacts."""

from .figures import (
    FigureSpec,
    SchemaError,
    build_convergence_figure,
    build_decay_figure,
    build_reports_figure,
    main_decay,
    main_reports,
    plot_convergence,
    plot_decay,
    plot_reports,
    render,
)

__all__ = [
    "FigureSpec",
    "SchemaError",
    "build_convergence_figure",
    "build_decay_figure",
    "build_reports_figure",
    "main_decay",
    "main_reports",
    "plot_convergence",
    "plot_decay",
    "plot_reports",
    "render",
]
