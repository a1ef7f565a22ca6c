/** Strict parsing of the balpha CSV artifact schemas. */

export type Row = Record<string, number>;

export class SchemaError extends Error {}

/**
 * Parse a CSV with a header line into numeric rows.  Every column named
 * in `required` must exist; the error names the first missing one.
 */
export function parseCsv(text: string, required: string[]): Row[] {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header line");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  for (const col of required) {
    if (!header.includes(col)) {
      throw new SchemaError(`missing column '${col}' (header: ${header.join(",")})`);
    }
  }
  if (lines.length === 1) {
    throw new SchemaError("empty CSV: header but no data rows");
  }
  const rows: Row[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(`row ${i} has ${parts.length} fields, expected ${header.length}`);
    }
    const row: Row = {};
    for (let j = 0; j < header.length; j++) {
      const v = Number(parts[j]);
      if (!Number.isFinite(v)) {
        throw new SchemaError(`row ${i}, column '${header[j]}' is not a finite number: ${parts[j]}`);
      }
      row[header[j]] = v;
    }
    rows.push(row);
  }
  return rows;
}
