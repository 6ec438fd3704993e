# -*- coding: utf-8 -*-
#
# Sphinx configuration for the comrades documentation.

import os
import sys

# The package is documented from the source tree.
sys.path.insert(0, os.path.abspath('..'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.todo',
    'sphinx.ext.coverage',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'comrades'
copyright = u'2026, the comrades developers'

version = '0.1.0'
release = '0.1.0'

exclude_patterns = ['_build']
pygments_style = 'sphinx'

autodoc_member_order = 'bysource'

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'comradesdoc'

latex_documents = [
    ('index', 'comrades.tex', u'comrades Documentation',
     u'the comrades developers', 'manual'),
]

man_pages = [
    ('index', 'comrades', u'comrades Documentation',
     [u'the comrades developers'], 1),
]
