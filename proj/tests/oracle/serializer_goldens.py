"""Writes the byte-exact golden renderings under tests/golden/.

The templates are transcribed here by hand, independently of the C++
serializers, so the two implementations check each other. Covers the 2x2
reference table (c1,c2 / a,b / c,d) in all 17 formats (shuffle seed 5), a
3x4 table for non-trivial permutations (seed 9), and the mixed per-row
rendering of a 5-row table (seed 3).
"""

import os

from splitmix64 import SplitMix64

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "..", "golden")

REF = {"headers": ["c1", "c2"], "rows": [["a", "b"], ["c", "d"]]}
T34 = {
    "headers": ["name", "size", "color", "note"],
    "rows": [
        ["fox", "small", "red", "quick"],
        ["bear", "large", "brown", "slow"],
        ["owl", "tiny", "grey", "silent"],
    ],
}
T5 = {
    "headers": ["c1", "c2"],
    "rows": [["a", "b"], ["c", "d"], ["e", "f"], ["g", "h"], ["i", "j"]],
}


def pipe(t):
    flat = t["headers"] + [c for row in t["rows"] for c in row]
    return " | ".join(flat)


def space(t):
    flat = t["headers"] + [c for row in t["rows"] for c in row]
    return " ".join(flat)


def token(t):
    parts = [f"<Header, 0, {j}> {h}" for j, h in enumerate(t["headers"])]
    for i, row in enumerate(t["rows"]):
        parts += [f"<CellValue, {i + 1}, {j}> {c}" for j, c in enumerate(row)]
    return " ".join(parts)


def csv_field(s):
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def csv(t):
    lines = ["," + ",".join(csv_field(h) for h in t["headers"])]
    for i, row in enumerate(t["rows"]):
        lines.append(str(i) + "," + ",".join(csv_field(c) for c in row))
    return "\n".join(lines)


def tsv(t):
    lines = ["\t".join(t["headers"])]
    lines += ["\t".join(row) for row in t["rows"]]
    return "\n".join(lines)


def markup_escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def html(t):
    lines = ["<table>"]
    lines.append("<tr>" + "".join(f"<th>{markup_escape(h)}</th>" for h in t["headers"]) + "</tr>")
    for row in t["rows"]:
        lines.append("<tr>" + "".join(f"<td>{markup_escape(c)}</td>" for c in row) + "</tr>")
    lines.append("</table>")
    return "\n".join(lines)


def markdown(t):
    lines = ["| " + " | ".join(t["headers"]) + " |"]
    lines.append("|" + "|".join("---" for _ in t["headers"]) + "|")
    lines += ["| " + " | ".join(row) + " |" for row in t["rows"]]
    return "\n".join(lines)


def latex_escape(s):
    out = []
    for ch in s:
        out.append("\\" + ch if ch in "&%$#_{}" else ch)
    return "".join(out)


def latex(t):
    lines = ["\\begin{tabular}{" + "l" * len(t["headers"]) + "}"]
    lines.append(" & ".join(latex_escape(h) for h in t["headers"]) + " \\\\")
    lines += [" & ".join(latex_escape(c) for c in row) + " \\\\" for row in t["rows"]]
    lines.append("\\end{tabular}")
    return "\n".join(lines)


def py_str(s):
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def dict_fmt(t):
    cols = []
    for j, h in enumerate(t["headers"]):
        body = ", ".join(f"{i}: {py_str(row[j])}" for i, row in enumerate(t["rows"]))
        cols.append(f"{py_str(h)}: {{{body}}}")
    return "{" + ", ".join(cols) + "}"


def json_str(s):
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def json_fmt(t):
    cols = []
    for j, h in enumerate(t["headers"]):
        body = ", ".join(f"{json_str(str(i))}: {json_str(row[j])}"
                         for i, row in enumerate(t["rows"]))
        cols.append(f"{json_str(h)}: {{{body}}}")
    return "{" + ", ".join(cols) + "}"


def xml_tag(s):
    def ok(i, ch):
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            return True
        return i > 0 and ch.isascii() and (ch.isdigit() or ch in ".-")
    out = "".join(ch if ok(i, ch) else "_" for i, ch in enumerate(s))
    return out if out else "_"


def xml(t):
    lines = ["<data>"]
    for row in t["rows"]:
        lines.append("<row>")
        for j, h in enumerate(t["headers"]):
            tag = xml_tag(h)
            lines.append(f"<{tag}>{markup_escape(row[j])}</{tag}>")
        lines.append("</row>")
    lines.append("</data>")
    return "\n".join(lines)


def transpose(t):
    parts = [str(i) for i in range(len(t["rows"]))]
    for j, h in enumerate(t["headers"]):
        parts.append(h)
        parts += [row[j] for row in t["rows"]]
    return " ".join(parts)


def shuffled_rows(t, seed):
    perm = SplitMix64(seed).shuffle(list(range(len(t["rows"]))))
    return space({"headers": t["headers"], "rows": [t["rows"][i] for i in perm]})


def shuffled_cols(t, seed):
    perm = SplitMix64(seed).shuffle(list(range(len(t["headers"]))))
    return space({
        "headers": [t["headers"][j] for j in perm],
        "rows": [[row[j] for j in perm] for row in t["rows"]],
    })


def mschema(t):
    schema = ", ".join(f"{h}: TEXT" for h in t["headers"])
    data = ", ".join(
        "{" + ", ".join(f"{py_str(h)}: {py_str(row[j])}"
                        for j, h in enumerate(t["headers"])) + "}"
        for row in t["rows"])
    return f"{{'schema': {{{schema}}}, 'data': [{data}]}}"


def macschema(t):
    fields = ["{'name': 'index', 'type': 'integer'}"]
    fields += [f"{{'name': {py_str(h)}, 'type': 'string'}}" for h in t["headers"]]
    data = ", ".join(
        "{" + f"'index': {i}, " + ", ".join(
            f"{py_str(h)}: {py_str(row[j])}" for j, h in enumerate(t["headers"])) + "}"
        for i, row in enumerate(t["rows"]))
    return ("{'fields': [" + ", ".join(fields) + "], 'primaryKey': ['index'], 'data': ["
            + data + "]}")


def sql_str(s):
    return "'" + s.replace("'", "''") + "'"


def ddl(t):
    cols = ", ".join(f"{h} TEXT" for h in t["headers"])
    out = f"CREATE TABLE Table ({cols});"
    for row in t["rows"]:
        out += " INSERT INTO Table VALUES (" + ",".join(sql_str(c) for c in row) + ");"
    return out


MIXED_POOL = ["csv", "tsv", "html", "markdown", "latex", "json", "pipe", "token", "space"]
RENDERERS = {
    "pipe": pipe, "token": token, "space": space, "csv": csv, "tsv": tsv,
    "html": html, "markdown": markdown, "latex": latex, "dict": dict_fmt,
    "json": json_fmt, "xml": xml, "transpose": transpose,
    "mschema": mschema, "macschema": macschema, "ddl": ddl,
}


def mixed(t, seed):
    rng = SplitMix64(seed)
    drawn, pieces = [], []
    for row in t["rows"]:
        f = MIXED_POOL[rng.next_below(9)]
        drawn.append(f)
        pieces.append(RENDERERS[f]({"headers": t["headers"], "rows": [row]}))
    return drawn, "\n".join(pieces)


def write(name, text):
    path = os.path.join(GOLDEN_DIR, name + ".golden")
    with open(path, "w", newline="") as f:
        f.write(text)
    print(f"wrote {name}.golden ({len(text)} bytes)")


def main():
    os.makedirs(GOLDEN_DIR, exist_ok=True)
    for name, fn in RENDERERS.items():
        write(name, fn(REF))
    write("shuffled_rows", shuffled_rows(REF, 5))
    write("shuffled_cols", shuffled_cols(REF, 5))
    write("shuffled_rows_3x4", shuffled_rows(T34, 9))
    write("shuffled_cols_3x4", shuffled_cols(T34, 9))

    drawn, text = mixed(T5, 3)
    write("mixed_5row", text)
    print("// mixed(5-row, seed 3) format sequence:", drawn)

    perm2r = SplitMix64(5).shuffle(list(range(2)))
    perm2c = SplitMix64(5).shuffle(list(range(2)))
    perm3 = SplitMix64(9).shuffle(list(range(3)))
    perm4 = SplitMix64(9).shuffle(list(range(4)))
    print("// row perm n=2 seed=5:", perm2r, " col perm n=2 seed=5:", perm2c)
    print("// row perm n=3 seed=9:", perm3, " col perm n=4 seed=9:", perm4)


if __name__ == "__main__":
    main()
