import assert from "node:assert/strict";
import { test } from "node:test";

import { EXPECTED_HEADER, SchemaError, parseResults } from "../src/frame.js";
import { mergedCsv } from "./fixtures.js";

test("parses a well-formed merged CSV", () => {
  const frame = parseResults(mergedCsv());
  assert.equal(frame.length, 2 * 2 * 2 * 2 * 2 * 4);
  assert.deepEqual(frame.scenarios(), ["gradient"]);
  assert.deepEqual(frame.speeds("gradient"), [0, 1]);
});

test("header-only file yields an empty frame", () => {
  const frame = parseResults(EXPECTED_HEADER.join(",") + "\n");
  assert.equal(frame.length, 0);
  assert.deepEqual(frame.scenarios(), []);
});

test("schema mismatch names the offending column", () => {
  const bad = mergedCsv().replace("lambda_inv", "lambda");
  assert.throws(
    () => parseResults(bad),
    (error: unknown) =>
      error instanceof SchemaError &&
      error.message.includes("column 5") &&
      error.message.includes("lambda_inv"),
  );
});

test("missing column rejected", () => {
  const lines = mergedCsv().split("\n");
  const truncated = lines
    .map((line) => line.split(",").slice(0, -1).join(","))
    .join("\n");
  assert.throws(() => parseResults(truncated), SchemaError);
});

test("duplicate row keys rejected", () => {
  const lines = mergedCsv().trimEnd().split("\n");
  const duplicated = [...lines, lines[1]!].join("\n");
  assert.throws(
    () => parseResults(duplicated),
    (error: unknown) => error instanceof SchemaError && error.message.includes("duplicate"),
  );
});

test("non-numeric field reported with its line", () => {
  const lines = mergedCsv().trimEnd().split("\n");
  lines[3] = lines[3]!.replace(/^[^,]+/, "soon");
  assert.throws(
    () => parseResults(lines.join("\n")),
    (error: unknown) =>
      error instanceof SchemaError && error.message.includes("line 4") && error.message.includes("time"),
  );
});

test("infinite errors parse through", () => {
  const lines = mergedCsv().trimEnd().split("\n");
  const parts = lines[1]!.split(",");
  parts[7] = "inf";
  lines[1] = parts.join(",");
  const frame = parseResults(lines.join("\n"));
  assert.equal(frame.rows[0]!.meanError, Infinity);
});
