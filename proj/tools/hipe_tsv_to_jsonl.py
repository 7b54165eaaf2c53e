#!/usr/bin/env python3
"""Convert a HIPE-style NE TSV file to mention JSONL.

Reads the TOKEN, NE-COARSE-LIT, NEL-LIT and MISC columns, rebuilds text with
NoSpaceAfter, and emits one mention per B-/I- span with the sentence it sits
in as context. Offsets are UTF-8 byte offsets.
"""

import argparse
import json
import sys

LANGUAGE_NAMES = {"de": "German", "en": "English", "fr": "French", "fi": "Finnish", "sv": "Swedish"}


def read_documents(lines):
    # A comment block following tokens opens the next document.
    doc, header = {"meta": {}, "tokens": []}, None
    for raw in lines:
        line = raw.rstrip("\n")
        if line.startswith("# "):
            if doc["tokens"]:
                yield doc
                doc = {"meta": {}, "tokens": []}
            key, _, value = line[2:].partition("=")
            doc["meta"][key.strip().split(":")[-1]] = value.strip()
            continue
        if not line.strip():
            continue
        cells = line.split("\t")
        if header is None:
            header = cells
            continue
        doc["tokens"].append(dict(zip(header, cells)))
    if doc["tokens"]:
        yield doc


def sentences(tokens):
    current = []
    for tok in tokens:
        current.append(tok)
        if "EndOfSentence" in tok.get("MISC", ""):
            yield current
            current = []
    if current:
        yield current


def convert(doc, genre, counter):
    meta = doc["meta"]
    doc_id = meta.get("document_id", f"doc{counter[0]}")
    language = meta.get("language", "")
    date = meta.get("date", "")
    out = []
    for sent in sentences(doc["tokens"]):
        text = b""
        spans, open_span = [], None
        for tok in sent:
            start = len(text)
            text += tok["TOKEN"].encode("utf-8")
            end = len(text)
            if "NoSpaceAfter" not in tok.get("MISC", ""):
                text += b" "
            tag = tok.get("NE-COARSE-LIT", "O")
            if tag.startswith("B-"):
                open_span = [start, end, tok.get("NEL-LIT", "_")]
                spans.append(open_span)
            elif tag.startswith("I-") and open_span is not None:
                open_span[1] = end
            else:
                open_span = None
        text = text.rstrip(b" ")
        decoded = text.decode("utf-8")
        for start, end, link in spans:
            counter[0] += 1
            mention = {
                "doc_id": doc_id,
                "mention_id": f"{doc_id}:{counter[0]}",
                "text": decoded,
                "start": start,
                "end": end,
                "language": language,
                "language_name": LANGUAGE_NAMES.get(language, language),
                "document_date": date,
                "genre": genre,
            }
            if link not in ("_", ""):
                mention["gold_qid"] = link
            out.append(mention)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("tsv")
    ap.add_argument("--out", required=True)
    ap.add_argument("--genre", default="newspaper")
    args = ap.parse_args(argv)
    counter = [0]
    with open(args.tsv, encoding="utf-8") as f, open(args.out, "w", encoding="utf-8", newline="\n") as out:
        n = 0
        for doc in read_documents(f):
            for m in convert(doc, args.genre, counter):
                out.write(json.dumps(m, ensure_ascii=False, sort_keys=True) + "\n")
                n += 1
    print(f"wrote {n} mentions -> {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
