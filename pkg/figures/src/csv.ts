/**
 * Strict reader for the harness result CSV.
 *
 * The harness writes plain comma-separated values with a fixed header and no
 * quoting, so parsing is a straight split; all validation lives in column
 * lookups that name the missing column.
 */

export class SchemaError extends Error {}
export class EmptyPlotError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
  path: string;
}

export function parseCsv(text: string, path = "<memory>"): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${path}: row ${i + 1} has ${cells.length} cells, header has ${header.length}`
      );
    }
    return cells;
  });
  return { header, rows, path };
}

export function columnIndex(table: Table, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`${table.path}: missing column '${name}'`);
  }
  return idx;
}

/** Cell accessor; empty string means "not present". */
export function cell(table: Table, row: string[], name: string): string {
  return row[columnIndex(table, name)];
}
