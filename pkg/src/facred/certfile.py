"""Reduction certificate files, format "facred-cert v1".

Line-oriented, self-contained text:

    facred-cert v1
    blocks: orthant 5 | psd 3 ...
    steps: <t>
    step <i> reducing=<0|1>
    <one line per block: the certificate element's entries, row-major for
     PSD blocks, full precision>
    x_strict: <m floats>

Certificates serialize the chain of reducing elements y_1..y_t together with
a strictly feasible point for the reduced system; faces are recomputed from
the chain on verification, so they are not stored.
"""

from __future__ import annotations

import numpy as np

from .model import ConeBlock, YElement

HEADER = "facred-cert v1"


class CertFormatError(ValueError):
    """Malformed certificate file."""


def _format_blocks(blocks) -> str:
    return " | ".join(f"{blk.kind} {blk.size}" for blk in blocks)


def _parse_blocks(line):
    blocks = []
    body = line.split(":", 1)[1]
    for piece in body.split("|"):
        toks = piece.split()
        if len(toks) != 2:
            raise CertFormatError(f"bad block descriptor: {piece!r}")
        blocks.append(ConeBlock(toks[0], int(toks[1])))
    return tuple(blocks)


def _element_lines(y: YElement):
    lines = []
    for blk, part in zip(y.blocks, y.parts):
        lines.append(" ".join(f"{v:.17g}" for v in np.asarray(part).reshape(-1)))
    return lines


def _read_element(blocks, lines, at):
    parts = []
    for blk in blocks:
        if at >= len(lines):
            raise CertFormatError("unexpected end of file inside an element")
        vals = [float(t) for t in lines[at].split()]
        at += 1
        if blk.kind == "orthant":
            if len(vals) != blk.size:
                raise CertFormatError("orthant payload length mismatch")
            parts.append(np.array(vals))
        else:
            if len(vals) != blk.size * blk.size:
                raise CertFormatError("psd payload length mismatch")
            parts.append(np.array(vals).reshape(blk.size, blk.size))
    return YElement(blocks, parts), at


def write_certificate(cert) -> str:
    """Serialize a ReductionCertificate (ys beyond the leading zero, flags,
    strict point)."""
    blocks = cert.ys[0].blocks
    out = [HEADER, f"blocks: {_format_blocks(blocks)}",
           f"steps: {len(cert.ys) - 1}"]
    for i, y in enumerate(cert.ys[1:], start=1):
        flag = 1 if cert.reducing_flags[i - 1] else 0
        out.append(f"step {i} reducing={flag}")
        out.extend(_element_lines(y))
    out.append("x_strict: " + " ".join(f"{v:.17g}" for v in cert.x_strict))
    return "\n".join(out) + "\n"


def read_certificate(text):
    """Parse certificate text; returns (blocks, ys, reducing_flags, x_strict)
    with ys including the leading zero element."""
    lines = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != HEADER:
        raise CertFormatError(f"missing header line {HEADER!r}")
    if len(lines) < 3 or not lines[1].startswith("blocks:"):
        raise CertFormatError("missing blocks line")
    blocks = _parse_blocks(lines[1])
    if not lines[2].startswith("steps:"):
        raise CertFormatError("missing steps line")
    nsteps = int(lines[2].split(":", 1)[1])
    ys = [YElement.zeros(blocks)]
    flags = []
    at = 3
    for i in range(1, nsteps + 1):
        if at >= len(lines) or not lines[at].startswith(f"step {i} "):
            raise CertFormatError(f"missing step {i} marker")
        marker = lines[at].split("reducing=")
        if len(marker) != 2 or marker[1] not in ("0", "1"):
            raise CertFormatError(f"bad step marker: {lines[at]!r}")
        flags.append(marker[1] == "1")
        at += 1
        y, at = _read_element(blocks, lines, at)
        ys.append(y)
    if at >= len(lines) or not lines[at].startswith("x_strict:"):
        raise CertFormatError("missing x_strict line")
    x_strict = np.array([float(t) for t in lines[at].split(":", 1)[1].split()])
    return blocks, ys, flags, x_strict
