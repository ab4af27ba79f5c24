/* =========================================
   Evidence highlighting

   The backend anchors every generated sentence to half-open
   [start, end) ranges in a source document, counted in Unicode
   code points.  JavaScript strings index UTF-16 code units, so
   offsets are converted before slicing — otherwise any document
   containing an astral-plane character (e.g. an emoji in a
   transcript) would shift every later highlight.

   Segmentation is lossless: concatenating the produced segments
   always reproduces the document text exactly.
   ========================================= */

import type { EvidenceSpan } from "./types.js";

export interface TextSegment {
  text: string;
  highlighted: boolean;
}

/** Convert a code-point offset into a UTF-16 code-unit offset. */
export function codePointToUnitOffset(text: string, cpOffset: number): number {
  if (cpOffset <= 0) {
    return 0;
  }
  let units = 0;
  let points = 0;
  for (const ch of text) {
    if (points >= cpOffset) {
      break;
    }
    units += ch.length;
    points += 1;
  }
  return units;
}

interface UnitRange {
  start: number;
  end: number;
}

function toUnitRanges(text: string, spans: EvidenceSpan[]): UnitRange[] {
  const ranges: UnitRange[] = [];
  for (const span of spans) {
    const start = codePointToUnitOffset(text, span.start);
    const end = codePointToUnitOffset(text, span.end);
    if (end > start) {
      ranges.push({ start: Math.min(start, text.length), end: Math.min(end, text.length) });
    }
  }
  ranges.sort((a, b) => a.start - b.start || a.end - b.end);

  // Merge overlapping or touching ranges so segments never nest.
  const merged: UnitRange[] = [];
  for (const range of ranges) {
    const last = merged[merged.length - 1];
    if (last !== undefined && range.start <= last.end) {
      last.end = Math.max(last.end, range.end);
    } else {
      merged.push({ ...range });
    }
  }
  return merged;
}

/**
 * Split a document into alternating plain/highlighted segments.
 * Empty segments are dropped; the concatenation of all segment
 * texts equals the input.
 */
export function segmentText(text: string, spans: EvidenceSpan[]): TextSegment[] {
  const segments: TextSegment[] = [];
  let cursor = 0;
  for (const range of toUnitRanges(text, spans)) {
    if (range.start > cursor) {
      segments.push({ text: text.slice(cursor, range.start), highlighted: false });
    }
    segments.push({ text: text.slice(range.start, range.end), highlighted: true });
    cursor = range.end;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), highlighted: false });
  }
  return segments;
}

/** Build DOM for a document body with its evidence spans marked. */
export function renderHighlightedText(
  text: string,
  spans: EvidenceSpan[],
): DocumentFragment {
  const fragment = document.createDocumentFragment();
  for (const segment of segmentText(text, spans)) {
    if (segment.highlighted) {
      const mark = document.createElement("mark");
      mark.className = "evidence-highlight";
      mark.textContent = segment.text;
      fragment.appendChild(mark);
    } else {
      fragment.appendChild(document.createTextNode(segment.text));
    }
  }
  return fragment;
}
