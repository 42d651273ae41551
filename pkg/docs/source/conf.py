# type: ignore
# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html
# -- Path setup --------------------------------------------------------------
import os
import sys

sys.path.insert(0, os.path.abspath("../.."))


# -- Project information -----------------------------------------------------

project = "harmonic-product"
copyright = "2024, Energy & Environmental Economics, Inc."
author = "Energy & Environmental Economics, Inc."


# -- General configuration ---------------------------------------------------

extensions = [
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx_copybutton",
    "sphinxcontrib.autodoc_pydantic",
    "sphinx_design",
]

autodoc_member_order = "bysource"
autodoc_pydantic_model_show_json = False
autodoc_pydantic_model_show_config_summary = False

# -- Options for HTML output -------------------------------------------------

html_theme = "furo"
html_title = "harmonic-product"

html_theme_options = {
    "light_css_variables": {
        "color-brand-primary": "#034E6E",
        "color-brand-background": "#E2ECF0",
    },
    "dark_css_variables": {
        "color-brand-primary": "#C4AD73",
        "color-brand-background": "#212529",
    },
    "sidebar_hide_name": False,
}

add_module_names = False

suppress_warnings = ["myst.header"]

myst_enable_extensions = [
    "amsmath",
    "dollarmath",
    "colon_fence",
]
