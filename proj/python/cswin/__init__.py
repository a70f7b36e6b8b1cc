# Copyright 2026 The cswin-ref Authors.
# SPDX-License-Identifier: Apache-2.0
"""Cross-shaped window attention: shapes, costs, forward pass and checks."""

import json

from ._cswin import *  # noqa: F401,F403
from ._cswin import cost_report_json, reference_json


def cost_report(config, resolution=None, name="custom"):
    """Parameter and multiply-accumulate report as a dict."""
    return json.loads(cost_report_json(config, resolution, name))


def reference_table():
    return json.loads(reference_json())
