import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

export const MASK_SENTINEL = -Number.MAX_VALUE;

const here = path.dirname(fileURLToPath(import.meta.url));
export const goldensDir = path.join(here, "..", ".goldens");
export const vocabPath = path.join(goldensDir, "vocab.txt");

export interface Vocab {
  tokens: string[];
  kappa: number;
  tau: number;
  epsilon: number;
  eos: number;
  id(token: string): number;
}

/** Parse the engine's vocabulary file: one token per line + 4-line footer. */
export function loadVocab(file: string = vocabPath): Vocab {
  const lines = fs.readFileSync(file, "utf-8").split("\n").filter((l) => l.length > 0);
  const footer = lines.slice(-4);
  const tokens = lines.slice(0, -4);
  const ids: Record<string, number> = {};
  for (const line of footer) {
    const match = /^#(kappa|tau|epsilon|eos)=(\d+)$/.exec(line);
    if (!match) throw new Error(`bad vocabulary footer line: ${line}`);
    ids[match[1]!] = Number(match[2]);
  }
  return {
    tokens,
    kappa: ids["kappa"]!,
    tau: ids["tau"]!,
    epsilon: ids["epsilon"]!,
    eos: ids["eos"]!,
    id(token: string): number {
      const index = tokens.indexOf(token);
      if (index < 0) throw new Error(`token not in vocabulary: ${token}`);
      return index;
    },
  };
}

export interface Golden {
  sentence: number[];
  types: string[];
  walk: number[];
  scores: number[];
  masked: number[];
}

export function loadGoldens(): Golden[] {
  const file = path.join(goldensDir, "goldens.jsonl");
  return fs
    .readFileSync(file, "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as Golden);
}

/** Indices whose score survived the mask. */
export function unmaskedIndices(masked: readonly number[]): number[] {
  const out: number[] = [];
  masked.forEach((value, index) => {
    if (value !== MASK_SENTINEL) out.push(index);
  });
  return out;
}
