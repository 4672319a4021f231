#!/usr/bin/env node
// teb-export: write text or image embeddings into a TEB1 file.
//
//   teb-export --model <id> --texts sentences.txt --out prompts.teb
//   teb-export --model <id> --images imagedir --out images.teb --batch 64
//
// Model ids: "dev/hash-<dim>" runs the built-in deterministic encoder;
// other ids load a CLIP through @xenova/transformers (install separately).

import process from "node:process";

import { exportImages, exportTexts, readTextList } from "./export.js";

interface Args {
  model: string;
  texts?: string;
  images?: string;
  out: string;
  batch: number;
}

function parseArgs(argv: string[]): Args {
  const args: Partial<Args> = { batch: 64 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--model":
        args.model = value;
        i++;
        break;
      case "--texts":
        args.texts = value;
        i++;
        break;
      case "--images":
        args.images = value;
        i++;
        break;
      case "--out":
        args.out = value;
        i++;
        break;
      case "--batch":
        args.batch = parseInt(value, 10);
        i++;
        break;
      default:
        usage(`unknown flag ${flag}`);
    }
  }
  if (!args.model || !args.out) usage("--model and --out are required");
  if (!args.texts === !args.images) usage("exactly one of --texts/--images");
  if (!(args.batch! > 0)) usage("--batch must be positive");
  return args as Args;
}

function usage(message: string): never {
  console.error(`teb-export: ${message}`);
  console.error(
    "usage: teb-export --model <id> (--texts f.txt | --images dir) " +
      "--out f.teb [--batch 64]",
  );
  process.exit(1);
}

async function main(): Promise<number> {
  const args = parseArgs(process.argv.slice(2));
  try {
    const result = args.texts
      ? await exportTexts(await readTextList(args.texts), args.model, args.out, args.batch)
      : await exportImages(args.images!, args.model, args.out, args.batch);
    console.error(
      `wrote ${result.count} records (dim ${result.dim}) to ${result.outPath}`,
    );
    for (const line of result.skipped) console.error(`  skipped ${line}`);
    return 0;
  } catch (err) {
    console.error(`teb-export: ${(err as Error).message}`);
    return 2;
  }
}

main().then((code) => process.exit(code));
