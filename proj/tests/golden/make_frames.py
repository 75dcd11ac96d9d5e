#!/usr/bin/env python3
"""Writes frames.hex: canonical frames built with struct, independent of the C++ encoder.

Each line is `<name> <hex>`. Regenerate with: python3 make_frames.py > frames.hex
"""
import struct


def frame(msg_type, session, payload):
    return struct.pack("<BIQ", msg_type, session, len(payload)) + payload


def s16(text):
    raw = text.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def params(items):
    out = struct.pack("<H", len(items))
    for key, tag, value in items:
        out += s16(key) + struct.pack("<B", tag)
        if tag == 0:
            out += struct.pack("<d", value)
        elif tag == 1:
            out += struct.pack("<q", value)
        elif tag == 2:
            out += s16(value)
        elif tag == 3:
            out += struct.pack("<B", 1 if value else 0)
        elif tag == 4:
            out += struct.pack("<Q", value)
    return out


def info(matrix_id, rows, cols, entries):
    out = struct.pack("<QQQH", matrix_id, rows, cols, len(entries))
    for w, a, b in entries:
        out += struct.pack("<HQQ", w, a, b)
    return out


def rows(matrix_id, batch):
    out = struct.pack("<QI", matrix_id, len(batch))
    for index, values in batch:
        out += struct.pack("<Q", index) + b"".join(struct.pack("<d", v) for v in values)
    return out


def raw_f64(bits):
    return struct.unpack("<d", struct.pack("<Q", bits))[0]


FRAMES = [
    ("handshake", frame(0x01, 0, struct.pack("<HH", 1, 4))),
    ("handshake_ack", frame(0x02, 5, struct.pack("<IH", 5, 2)
                            + struct.pack("<H", 0) + s16("127.0.0.1:4100")
                            + struct.pack("<H", 1) + s16("127.0.0.1:4101"))),
    ("register_library", frame(0x03, 5, s16("builtin") + s16(""))),
    ("library_ack", frame(0x04, 5, struct.pack("<H", 1))),
    ("create_matrix", frame(0x05, 5, struct.pack("<QQ", 10, 4))),
    ("matrix_info", frame(0x06, 5, info(3, 10, 4, [(0, 0, 3), (1, 3, 6), (2, 6, 9), (3, 9, 10)]))),
    ("send_rows", frame(0x07, 1, rows(7, [(3, [1.0, 2.0])]))),
    ("send_rows_special", frame(0x07, 2, rows(8, [(0, [-0.0, raw_f64(1), float("inf")]),
                                                  (5, [raw_f64(0x7FF8000000000123), float("-inf"), 1e-310])]))),
    ("rows_ack", frame(0x08, 1, struct.pack("<QI", 7, 1))),
    ("send_complete", frame(0x09, 1, struct.pack("<Q", 7))),
    ("matrix_ready", frame(0x0A, 1, struct.pack("<Q", 7))),
    ("run_task", frame(0x0B, 5, struct.pack("<H", 1) + s16("cg_solve") + struct.pack("<BQQ", 2, 3, 4)
                       + params([("lambda", 0, 1e-5), ("max_iter", 1, 1000), ("note", 2, "x"),
                                 ("flag", 3, True), ("m", 4, 3)]))),
    ("task_result", frame(0x0C, 5, struct.pack("<BB", 0, 2)
                          + info(11, 4, 4, [(0, 0, 2), (1, 2, 4)])
                          + info(12, 4, 2, [(0, 0, 2), (1, 2, 4)])
                          + params([("iterations", 1, 17), ("residual.0", 0, 2.5e-11), ("converged", 3, False)]))),
    ("fetch_rows", frame(0x0D, 5, struct.pack("<QQI", 11, 2, 2))),
    ("rows_data", frame(0x0E, 5, rows(11, [(2, [0.5, -1.5]), (3, [2.0, 4.0])]))),
    ("rows_data_empty", frame(0x0E, 5, rows(11, []))),
    ("release_matrix", frame(0x0F, 5, struct.pack("<Q", 11))),
    ("close_session", frame(0x10, 9, b"")),
    ("error", frame(0x7F, 5, struct.pack("<H", 2) + s16("requested 8 workers, pool has 4"))),
]

if __name__ == "__main__":
    for name, data in FRAMES:
        print(name, data.hex())
