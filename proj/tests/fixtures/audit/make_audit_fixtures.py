#!/usr/bin/env python3
"""Builds the audit corpus: a remediated workbook that satisfies every rule,
one mutation per design-standard rule, and a typical first-audit file.

manifest.json lists, per fixture, the rule ids that must fire and the
audit location (if any) to pass in.
"""

import copy
import json
from pathlib import Path

HERE = Path(__file__).resolve().parent


def text(v):
    return {"v": v}


def num(v):
    return {"v": v}


def formula(f, v, locked=True):
    return {"f": f, "v": v, "locked": locked}


def golden():
    return {
        "name": "remediated",
        "sheets": [
            {
                "name": "Documentation",
                "declared_purpose": "documentation",
                "cells": {
                    "A1": text("Purpose"), "B1": text("Quarterly revenue forecast"),
                    "A2": text("Owner"), "B2": text("Finance Operations"),
                    "A3": text("Version"), "B3": text("1.2"),
                    "A4": text("Last Updated"), "B4": text("2024-01-31"),
                    "A5": text("Sheet Purpose"), "B5": text("Inputs"), "C5": text("input"),
                    "A6": text("Sheet Purpose"), "B6": text("Calc"), "C6": text("calculation"),
                    "A7": text("Sheet Purpose"), "B7": text("Outputs"), "C7": text("output"),
                },
            },
            {
                "name": "Inputs",
                "protection_enabled": True,
                "cells": {
                    "A1": text("Item"), "B1": text("Amount"), "C1": text("Units"),
                    "A2": text("Units sold"), "B2": num(1200), "C2": text("count"),
                    "A3": text("Unit price"), "B3": num(25.5), "C3": text("GBP"),
                    "A4": text("Tax rate"), "B4": num(0.2), "C4": text("ratio"),
                },
            },
            {
                "name": "Calc",
                "protection_enabled": True,
                "cells": {
                    "A1": text("Line"), "B1": text("Value"),
                    "A2": text("Gross revenue"), "B2": formula("Inputs!B2*Inputs!B3", 30600),
                    "A4": text("Tax"), "B4": formula("B2*Inputs!B4", 6120),
                    "A6": text("Net revenue"), "B6": formula("B2-B4", 24480),
                    "A8": text("Check: net + tax - gross"), "B8": formula("B6+B4-B2", 0),
                },
            },
            {
                "name": "Outputs",
                "protection_enabled": True,
                "cells": {"A1": text("Net revenue"), "B1": formula("Calc!B6", 24480)},
            },
            {
                "name": "Change_Log",
                "declared_purpose": "log",
                "cells": {
                    "A1": text("Date"), "B1": text("Author"), "C1": text("Description"),
                    "D1": text("Reason"), "E1": text("Reviewer"), "F1": text("Review Date"),
                    "A2": text("2024-01-31"), "B2": text("j.doe"), "C2": text("Added tax line"),
                    "D2": text("New tax regime"), "E2": text("a.smith"), "F2": text("2024-02-01"),
                },
            },
            {
                "name": "Review_Log",
                "declared_purpose": "log",
                "cells": {
                    "A1": text("Date"), "B1": text("Check Performed"), "C1": text("Result"), "D1": text("Reviewer"),
                    "A2": text("2024-02-01"), "B2": text("Control total"), "C2": text("Pass"), "D2": text("a.smith"),
                },
            },
        ],
        "named_ranges": {"CHK_BALANCE": "Calc!B8"},
        "security": {"encrypted": True},
    }


def sheet(wb, name):
    return next(s for s in wb["sheets"] if s["name"] == name)


def drop_sheet(wb, name):
    wb["sheets"] = [s for s in wb["sheets"] if s["name"] != name]


def defect(name, mutate):
    wb = copy.deepcopy(golden())
    wb["name"] = name
    mutate(wb)
    return wb


def doc01(wb):
    del sheet(wb, "Documentation")["cells"]["A2"]
    del sheet(wb, "Documentation")["cells"]["B2"]


def lab01(wb):
    del sheet(wb, "Inputs")["cells"]["B1"]


def sep01(wb):
    sheet(wb, "Calc")["cells"]["D2"] = num(0.2)


def lock01(wb):
    sheet(wb, "Calc")["cells"]["B4"]["locked"] = False


def chk01(wb):
    wb["named_ranges"] = {}


def log01(wb):
    sheet(wb, "Change_Log")["cells"]["F1"] = text("Signed Off")


def log02(wb):
    drop_sheet(wb, "Review_Log")


def tra01(wb):
    sheet(wb, "Calc")["hidden_rows"] = [7]


def sec01(wb):
    wb["security"] = {"encrypted": False}


def typical(wb):
    sheet(wb, "Calc")["cells"]["B4"]["locked"] = False          # DS-LOCK-01 high
    drop_sheet(wb, "Change_Log")                                  # DS-LOG-01 high
    wb["named_ranges"] = {}                                       # DS-CHK-01 medium
    del sheet(wb, "Inputs")["cells"]["B1"]                        # DS-LAB-01 medium
    drop_sheet(wb, "Review_Log")                                  # DS-LOG-02 medium
    sheet(wb, "Calc")["hidden_rows"] = [7]                        # DS-TRA-01 low
    sheet(wb, "Outputs")["cells"]["B2"] = formula("Calc!B10", 0)  # INT-05 low


UNRESTRICTED = "/shared/finance/forecast_v1.2_20240131.xlsx"

CORPUS = [
    ("remediated", None, [], None),
    ("defect_doc01", doc01, ["DS-DOC-01"], None),
    ("defect_lab01", lab01, ["DS-LAB-01"], None),
    ("defect_sep01", sep01, ["DS-SEP-01"], None),
    ("defect_lock01", lock01, ["DS-LOCK-01"], None),
    ("defect_chk01", chk01, ["DS-CHK-01"], None),
    ("defect_log01", log01, ["DS-LOG-01"], None),
    ("defect_log02", log02, ["DS-LOG-02"], None),
    ("defect_tra01", tra01, ["DS-TRA-01"], None),
    ("defect_sec01", sec01, ["DS-SEC-01"], UNRESTRICTED),
    ("typical", typical,
     ["DS-CHK-01", "DS-LAB-01", "DS-LOCK-01", "DS-LOG-01", "DS-LOG-02", "DS-TRA-01", "INT-05"], None),
]


def main():
    manifest = []
    for name, mutate, expect, location in CORPUS:
        wb = golden() if mutate is None else defect(name, mutate)
        (HERE / f"{name}.wb.json").write_text(json.dumps(wb, indent=1) + "\n")
        entry = {"file": f"{name}.wb.json", "expect_rules": expect}
        if location:
            entry["location"] = location
        manifest.append(entry)
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    config = {"rules": {"DS-SEC-01": {"restricted_paths": ["/secure/euc"]}}}
    (HERE / "config.json").write_text(json.dumps(config, indent=1) + "\n")


if __name__ == "__main__":
    main()
