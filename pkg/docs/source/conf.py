#!/usr/bin/env python3

# latentlens API documentation build configuration.
# Build with: sphinx-build -b html docs/source docs/build/html

import re
from pathlib import Path

from latentlens import __version__ as release

project = "latentlens"
author = "latentlens developers"
version = re.match(r"^([0-9]+\.[0-9]+).*", release).group(1)

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx_autodoc_typehints",
    "sphinx.ext.viewcode",
    "sphinx.ext.mathjax",
    "nbsphinx",
]

# numpy-heavy signatures read better without the full type expansion
autodoc_typehints = "description"
autodoc_member_order = "bysource"
napoleon_google_docstring = True
napoleon_numpy_docstring = False

templates_path = ["_templates"]
source_suffix = {".rst": "restructuredtext"}
master_doc = "index"
language = "en"
exclude_patterns = ["_build", "**.ipynb_checkpoints"]
pygments_style = "sphinx"

html_theme = "sphinx_rtd_theme"
html_theme_options = {"collapse_navigation": False}
html_show_sourcelink = False
htmlhelp_basename = "latentlensdoc"

nbsphinx_kernel_name = "python3"

PACKAGE = Path(__file__).resolve().parents[2] / "src" / "latentlens"


def _run_apidoc(_app) -> None:
    """Regenerate ``modules.rst`` and the per-package pages from the source tree."""
    from sphinx.ext import apidoc

    here = Path(__file__).resolve().parent
    apidoc.main(["--force", "--module-first", "--output-dir", str(here), str(PACKAGE), str(PACKAGE / "settings.py")])


def setup(app):
    app.connect("builder-inited", _run_apidoc)
