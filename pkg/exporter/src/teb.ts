// TEB1 binary tables: magic "TEB1", u32 record count, u32 dim, then per
// record a u32 UTF-8 byte length, the text bytes, and dim float32 values.
// Everything little-endian. This is the interchange format the embedding
// toolkit consumes.

export interface TebRecord {
  text: string;
  vector: Float32Array;
}

export interface TebTable {
  dim: number;
  records: TebRecord[];
}

const MAGIC = Buffer.from("TEB1", "ascii");

export function encodeTeb(table: TebTable): Buffer {
  const parts: Buffer[] = [];
  const header = Buffer.alloc(12);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(table.records.length, 4);
  header.writeUInt32LE(table.dim, 8);
  parts.push(header);
  for (const record of table.records) {
    if (record.vector.length !== table.dim) {
      throw new Error(
        `record "${record.text}" has ${record.vector.length} values, expected ${table.dim}`,
      );
    }
    const text = Buffer.from(record.text, "utf-8");
    const len = Buffer.alloc(4);
    len.writeUInt32LE(text.length, 0);
    const vec = Buffer.alloc(4 * table.dim);
    for (let i = 0; i < table.dim; i++) {
      const value = record.vector[i];
      if (!Number.isFinite(value)) {
        throw new Error(`record "${record.text}": non-finite value at ${i}`);
      }
      vec.writeFloatLE(value, 4 * i);
    }
    parts.push(len, text, vec);
  }
  return Buffer.concat(parts);
}

export function decodeTeb(data: Buffer): TebTable {
  if (data.length < 12) throw new Error("truncated header");
  if (!data.subarray(0, 4).equals(MAGIC)) {
    throw new Error(`bad magic ${JSON.stringify(data.subarray(0, 4).toString())}`);
  }
  const count = data.readUInt32LE(4);
  const dim = data.readUInt32LE(8);
  const records: TebRecord[] = [];
  let offset = 12;
  for (let i = 0; i < count; i++) {
    if (offset + 4 > data.length) throw new Error(`record ${i}: truncated length`);
    const textLen = data.readUInt32LE(offset);
    offset += 4;
    if (offset + textLen > data.length) throw new Error(`record ${i}: truncated text`);
    const text = data.subarray(offset, offset + textLen).toString("utf-8");
    offset += textLen;
    if (offset + 4 * dim > data.length) throw new Error(`record ${i}: truncated vector`);
    const vector = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      vector[j] = data.readFloatLE(offset + 4 * j);
      if (!Number.isFinite(vector[j])) {
        throw new Error(`record ${i} ("${text}"): non-finite value`);
      }
    }
    offset += 4 * dim;
    records.push({ text, vector });
  }
  if (offset !== data.length) throw new Error("trailing bytes after last record");
  return { dim, records };
}
