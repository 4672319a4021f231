import { readFile, readdir, stat, writeFile } from "node:fs/promises";
import { join } from "node:path";

import { loadModel } from "./models.js";
import { encodeTeb, TebRecord } from "./teb.js";

export interface ExportResult {
  outPath: string;
  count: number;
  dim: number;
  skipped: string[];
}

export async function exportTexts(
  texts: string[],
  modelId: string,
  outPath: string,
  batchSize = 64,
): Promise<ExportResult> {
  const model = loadModel(modelId);
  const vectors = await model.encodeTexts(texts, batchSize);
  const records: TebRecord[] = texts.map((text, i) => ({
    text,
    vector: vectors[i],
  }));
  const dim = model.dim;
  await writeFile(outPath, encodeTeb({ dim, records }));
  return { outPath, count: records.length, dim, skipped: [] };
}

export async function readTextList(path: string): Promise<string[]> {
  const raw = await readFile(path, "utf-8");
  return raw.split("\n").filter((line) => line.trim().length > 0);
}

// Image trees are one subdirectory per label; records are keyed
// "label/index" with indices assigned in sorted file order.
export async function collectImages(
  root: string,
): Promise<{ key: string; path: string }[]> {
  const out: { key: string; path: string }[] = [];
  const labels = (await readdir(root)).sort();
  for (const label of labels) {
    const labelDir = join(root, label);
    if (!(await stat(labelDir)).isDirectory()) continue;
    const files = (await readdir(labelDir)).sort();
    files.forEach((file, index) => {
      out.push({ key: `${label}/${index}`, path: join(labelDir, file) });
    });
  }
  return out;
}

export async function exportImages(
  root: string,
  modelId: string,
  outPath: string,
  batchSize = 64,
): Promise<ExportResult> {
  const model = loadModel(modelId);
  const entries = await collectImages(root);
  const records: TebRecord[] = [];
  const skipped: string[] = [];
  for (let start = 0; start < entries.length; start += batchSize) {
    const batch = entries.slice(start, start + batchSize);
    try {
      const vectors = await model.encodeImages(
        batch.map((e) => e.path),
        batchSize,
      );
      batch.forEach((entry, i) => {
        records.push({ text: entry.key, vector: vectors[i] });
      });
    } catch (err) {
      // per-item fallback so one unreadable file only skips itself
      for (const entry of batch) {
        try {
          const [vector] = await model.encodeImages([entry.path], 1);
          records.push({ text: entry.key, vector });
        } catch (itemErr) {
          skipped.push(`${entry.path}: ${(itemErr as Error).message}`);
        }
      }
    }
  }
  const dim = model.dim;
  await writeFile(outPath, encodeTeb({ dim, records }));
  return { outPath, count: records.length, dim, skipped };
}
