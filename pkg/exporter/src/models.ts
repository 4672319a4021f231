// Model registry. Two families:
//
//   dev/hash-<dim>   deterministic offline encoder with a declared width;
//                    no downloads, stable across runs and platforms. Used
//                    by the test suite and anywhere real model weights are
//                    unavailable.
//   anything else    treated as a Hugging Face CLIP id and served through
//                    @xenova/transformers, which must be installed
//                    separately (it pulls model weights on first use).
//
// Both emit unnormalized embeddings; consumers decide about normalization.

export interface EmbeddingModel {
  id: string;
  dim: number;
  encodeTexts(texts: string[], batchSize: number): Promise<Float32Array[]>;
  encodeImages(paths: string[], batchSize: number): Promise<Float32Array[]>;
}

const DEV_PATTERN = /^dev\/hash-(\d+)$/;

// xorshift128 over a string-seeded state: deterministic mixing weights.
function seededGenerator(seed: string): () => number {
  let a = 0x6c078965;
  let b = 0x9908b0df;
  let c = 0x9d2c5680;
  let d = 0xefc60000;
  for (let i = 0; i < seed.length; i++) {
    a = (a ^ seed.charCodeAt(i)) >>> 0;
    a = Math.imul(a, 0x01000193) >>> 0;
    d = (d + a) >>> 0;
  }
  return () => {
    const t = (a ^ (a << 11)) >>> 0;
    a = b;
    b = c;
    c = d;
    d = (d ^ (d >>> 19) ^ (t ^ (t >>> 8))) >>> 0;
    return d / 0x100000000;
  };
}

function bigramHistogram(data: Buffer): Float64Array {
  const hist = new Float64Array(256);
  let prev = 0;
  for (const byte of data) {
    hist[(prev * 131 + byte) % 256] += 1;
    prev = byte;
  }
  return hist;
}

class DevHashModel implements EmbeddingModel {
  readonly id: string;
  readonly dim: number;
  private readonly mix: Float64Array;

  constructor(id: string, dim: number) {
    this.id = id;
    this.dim = dim;
    const next = seededGenerator(id);
    this.mix = new Float64Array(dim * 256);
    for (let i = 0; i < this.mix.length; i++) {
      this.mix[i] = (next() - 0.5) * 0.5;
    }
  }

  private embed(data: Buffer): Float32Array {
    const hist = bigramHistogram(data);
    const out = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) {
      let acc = 0;
      for (let j = 0; j < 256; j++) {
        acc += this.mix[i * 256 + j] * hist[j];
      }
      out[i] = Math.fround(Math.tanh(acc));
    }
    return out;
  }

  async encodeTexts(texts: string[]): Promise<Float32Array[]> {
    return texts.map((t) => this.embed(Buffer.from("\x00" + t, "utf-8")));
  }

  async encodeImages(paths: string[]): Promise<Float32Array[]> {
    const { readFile } = await import("node:fs/promises");
    const out: Float32Array[] = [];
    for (const path of paths) {
      out.push(this.embed(await readFile(path)));
    }
    return out;
  }
}

class TransformersClipModel implements EmbeddingModel {
  readonly id: string;
  dim = 0;
  private readonly lib: Promise<any>;

  constructor(id: string) {
    this.id = id;
    // resolved at runtime only; the dependency is optional by design
    const specifier = "@xenova/transformers";
    this.lib = import(specifier).catch((err) => {
      throw new Error(
        `model "${id}" needs the optional dependency @xenova/transformers ` +
          `(npm install @xenova/transformers); import failed: ${err.message}`,
      );
    });
  }

  async encodeTexts(texts: string[], batchSize: number): Promise<Float32Array[]> {
    const { AutoTokenizer, CLIPTextModelWithProjection } = await this.lib;
    const tokenizer = await AutoTokenizer.from_pretrained(this.id);
    const model = await CLIPTextModelWithProjection.from_pretrained(this.id);
    const out: Float32Array[] = [];
    for (let start = 0; start < texts.length; start += batchSize) {
      const batch = texts.slice(start, start + batchSize);
      const inputs = tokenizer(batch, { padding: true, truncation: true });
      const { text_embeds } = await model(inputs);
      const [rows, cols] = text_embeds.dims;
      this.dim = cols;
      const data = text_embeds.data as Float32Array;
      for (let r = 0; r < rows; r++) {
        out.push(data.slice(r * cols, (r + 1) * cols));
      }
    }
    return out;
  }

  async encodeImages(paths: string[], batchSize: number): Promise<Float32Array[]> {
    const { AutoProcessor, CLIPVisionModelWithProjection, RawImage } = await this.lib;
    const processor = await AutoProcessor.from_pretrained(this.id);
    const model = await CLIPVisionModelWithProjection.from_pretrained(this.id);
    const out: Float32Array[] = [];
    for (let start = 0; start < paths.length; start += batchSize) {
      const batch = paths.slice(start, start + batchSize);
      const images = await Promise.all(batch.map((p: string) => RawImage.read(p)));
      const inputs = await processor(images);
      const { image_embeds } = await model(inputs);
      const [rows, cols] = image_embeds.dims;
      this.dim = cols;
      const data = image_embeds.data as Float32Array;
      for (let r = 0; r < rows; r++) {
        out.push(data.slice(r * cols, (r + 1) * cols));
      }
    }
    return out;
  }
}

export function loadModel(id: string): EmbeddingModel {
  const dev = DEV_PATTERN.exec(id);
  if (dev) {
    const dim = parseInt(dev[1], 10);
    if (!(dim > 0)) throw new Error(`bad dev model width in "${id}"`);
    return new DevHashModel(id, dim);
  }
  return new TransformersClipModel(id);
}
