import assert from "node:assert/strict";
import { mkdtemp, readFile, mkdir, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { collectImages, exportImages, exportTexts } from "../src/export.js";
import { loadModel } from "../src/models.js";
import { decodeTeb } from "../src/teb.js";

test("dev model: identical texts get identical vectors", async () => {
  const model = loadModel("dev/hash-16");
  const [a, b, c] = await model.encodeTexts(
    ["same text", "same text", "different"],
    64,
  );
  assert.deepEqual(Array.from(a), Array.from(b));
  assert.notDeepEqual(Array.from(a), Array.from(c));
});

test("dev model width comes from the id", () => {
  assert.equal(loadModel("dev/hash-16").dim, 16);
  assert.equal(loadModel("dev/hash-512").dim, 512);
  assert.throws(() => loadModel("dev/hash-0"), /width/);
});

test("text export writes a decodable table in input order", async () => {
  const dir = await mkdtemp(join(tmpdir(), "teb-"));
  const out = join(dir, "texts.teb");
  const texts = ["one", "two", "three"];
  const result = await exportTexts(texts, "dev/hash-8", out);
  assert.equal(result.count, 3);
  assert.equal(result.dim, 8);
  const decoded = decodeTeb(await readFile(out));
  assert.deepEqual(
    decoded.records.map((r) => r.text),
    texts,
  );
});

test("empty input list yields a valid count-0 table", async () => {
  const dir = await mkdtemp(join(tmpdir(), "teb-"));
  const out = join(dir, "empty.teb");
  const result = await exportTexts([], "dev/hash-8", out);
  assert.equal(result.count, 0);
  const decoded = decodeTeb(await readFile(out));
  assert.equal(decoded.records.length, 0);
  assert.equal(decoded.dim, 8);
});

test("image tree export keys records label/index", async () => {
  const root = await mkdtemp(join(tmpdir(), "imgs-"));
  for (const label of ["cat", "desk"]) {
    await mkdir(join(root, label));
    for (const name of ["b.img", "a.img"]) {
      await writeFile(join(root, label, name), `${label}:${name} bytes`);
    }
  }
  const entries = await collectImages(root);
  assert.deepEqual(
    entries.map((e) => e.key),
    ["cat/0", "cat/1", "desk/0", "desk/1"],
  );
  const out = join(root, "images.teb");
  const result = await exportImages(root, "dev/hash-6", out);
  assert.equal(result.count, 4);
  assert.deepEqual(result.skipped, []);
  const decoded = decodeTeb(await readFile(out));
  assert.deepEqual(
    decoded.records.map((r) => r.text),
    ["cat/0", "cat/1", "desk/0", "desk/1"],
  );
});

test("missing transformers dependency fails with guidance", async () => {
  const model = loadModel("Xenova/clip-vit-base-patch32");
  await assert.rejects(
    model.encodeTexts(["hi"], 8),
    /@xenova\/transformers/,
  );
});
