#!/usr/bin/env python3
"""Wrap the payload fixtures into Envelope NDJSON streams and a HAR capture.

Run from the repository root:  python3 tools/make_fixture_envelopes.py
Outputs are committed under fixtures/ so tests never depend on this script.
"""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
FX = ROOT / "fixtures"
HOST = "https://i.example-api.test"
CAPTURED_AT = 1717243200  # 2024-06-01T12:00:00Z


def body(name):
    return (FX / name).read_text(encoding="utf-8")


def envelope(eid, path, name, captured_at=CAPTURED_AT, status=200):
    return {
        "envelope_id": eid,
        "source_url": HOST + path,
        "method": "GET",
        "status": status,
        "captured_at": captured_at,
        "session_id": None,
        "body": body(name) if name else "",
    }


def write_ndjson(path, envs, extra_lines=()):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in envs:
            f.write(json.dumps(e, ensure_ascii=False) + "\n")
        for line in extra_lines:
            f.write(line + "\n")


REELS = envelope("env-reels-0001", "/api/v1/feed/reels_media/?reel_ids=1001&reel_ids=1002&reel_ids=1003",
                 "fx_reels_3users.json")
VIDEO = envelope("env-reels-0002", "/api/v1/feed/reels_media/?reel_ids=1004", "fx_video_item.json",
                 CAPTURED_AT + 60)
HIGHLIGHT = envelope("env-highlight-0001", "/api/v1/highlights/12345/highlights_tray/",
                     "fx_highlight_tray.json", CAPTURED_AT + 120)
TRAY = envelope("env-tray-0001", "/api/v1/feed/reels_tray/", "fx_tray.json", CAPTURED_AT - 30)
UNRELATED = envelope("env-other-0001", "/api/v1/accounts/current_user/", None, CAPTURED_AT - 60)
UNRELATED["body"] = '{"user": {"pk": "9999"}, "status": "ok"}'
MALFORMED = envelope("env-reels-bad-0001", "/api/v1/feed/reels_media/?reel_ids=1001",
                     "fx_malformed.json", CAPTURED_AT + 180)

write_ndjson(FX / "fx_reels_3users.ndjson", [REELS])
write_ndjson(FX / "fx_stream.ndjson", [UNRELATED, TRAY, REELS, VIDEO, HIGHLIGHT])
write_ndjson(FX / "fx_two_valid_one_malformed.ndjson", [TRAY, REELS],
             ['{"envelope_id": "env-broken", "source_url": "https://i.example-api.test/api/v1/feed/reels_media/",'])
write_ndjson(FX / "fx_quarantine.ndjson", [MALFORMED])


def har_entry(env, mime="application/json", text=True, started="2024-06-01T12:00:00.000Z"):
    content = {"size": len(env["body"].encode()), "mimeType": mime}
    if text and env["body"]:
        content["text"] = env["body"]
    return {
        "startedDateTime": started,
        "time": 42,
        "request": {"method": env["method"], "url": env["source_url"], "httpVersion": "HTTP/1.1",
                    "cookies": [], "headers": [], "queryString": [], "headersSize": -1, "bodySize": 0},
        "response": {"status": env["status"], "statusText": "OK", "httpVersion": "HTTP/1.1",
                     "cookies": [], "headers": [], "content": content, "redirectURL": "",
                     "headersSize": -1, "bodySize": content["size"]},
        "cache": {},
        "timings": {"send": 0, "wait": 40, "receive": 2},
    }


def har(entries):
    return {"log": {"version": "1.2", "creator": {"name": "fixture-generator", "version": "1"},
                    "pages": [], "entries": entries}}


no_content = envelope("unused", "/api/v1/feed/reels_media/?reel_ids=1001", None)
no_content["status"] = 204
image = envelope("unused", "/s/3141592653000000001_1080.jpg", None)
image["body"] = "/9j/4AAQSkZJRgABAQ=="
image_entry = har_entry(image, mime="image/jpeg")
image_entry["response"]["content"]["text"] = image["body"]
image_entry["response"]["content"]["encoding"] = "base64"

with open(FX / "fx_capture.har", "w", encoding="utf-8") as f:
    json.dump(har([har_entry(REELS), har_entry(no_content, started="2024-06-01T12:00:01.500Z"), image_entry]),
              f, ensure_ascii=False, indent=1)
with open(FX / "fx_empty.har", "w", encoding="utf-8") as f:
    json.dump(har([]), f, indent=1)
