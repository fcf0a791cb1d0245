#!/usr/bin/env node
/**
 * Export stride-8 VMF1 feature files for every frame in a directory.
 *
 *   vmf-export --frames DIR --out DIR [--layer NAME] [--model DIR] [--seed N]
 *
 * Without --model the built-in seeded backbone is used; --layer selects the
 * tap point (block1|block2|block3 for the built-in; any layer name for a
 * loaded model). Grids whose native stride is not 8 are resampled
 * bilinearly to ceil(H/8) x ceil(W/8). Channels are L2-normalized per pixel.
 * A manifest.json listing files and shapes is written alongside the features.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { buildBuiltinBackbone, DEFAULT_LAYER, layerOutput, loadModelDir } from './backbone';
import { readPng, RgbImage } from './images';
import { encodeVmf, FeatureGrid } from './vmf';

export const TARGET_STRIDE = 8;

export interface ManifestEntry {
  file: string;
  source: string;
  height: number;
  width: number;
  channels: number;
  stride: number;
}

export interface ExportReport {
  written: ManifestEntry[];
  failures: Array<{ source: string; error: string }>;
}

function toInputTensor(image: RgbImage): tf.Tensor4D {
  const { width, height, rgb } = image;
  const values = new Float32Array(width * height * 3);
  for (let i = 0; i < values.length; i++) {
    values[i] = rgb[i] / 255;
  }
  return tf.tensor4d(values, [1, height, width, 3]);
}

/** Run the backbone on one frame and produce the normalized stride-8 grid. */
export function extractGrid(model: tf.LayersModel, image: RgbImage): FeatureGrid {
  const targetH = Math.ceil(image.height / TARGET_STRIDE);
  const targetW = Math.ceil(image.width / TARGET_STRIDE);
  const data = tf.tidy(() => {
    const input = toInputTensor(image);
    let features = model.predict(input) as tf.Tensor4D;
    if (features.shape[1] !== targetH || features.shape[2] !== targetW) {
      features = tf.image.resizeBilinear(features, [targetH, targetW], true);
    }
    const norm = tf.norm(features, 'euclidean', 3, true);
    const normalized = tf.div(features, tf.maximum(norm, 1e-12));
    return normalized.squeeze([0]) as tf.Tensor3D;
  });
  const out = data.dataSync() as Float32Array;
  const channels = data.shape[2];
  data.dispose();
  return {
    height: targetH,
    width: targetW,
    channels,
    stride: TARGET_STRIDE,
    data: Float32Array.from(out),
  };
}

export async function resolveModel(modelDir?: string, layer?: string, seed = 1234) {
  const base = modelDir ? await loadModelDir(modelDir) : buildBuiltinBackbone(seed);
  return layerOutput(base, layer ?? DEFAULT_LAYER);
}

export async function exportFrames(
  framesDir: string,
  outDir: string,
  opts: { layer?: string; modelDir?: string; seed?: number } = {},
): Promise<ExportReport> {
  const model = await resolveModel(opts.modelDir, opts.layer, opts.seed);
  fs.mkdirSync(outDir, { recursive: true });
  const frames = fs
    .readdirSync(framesDir)
    .filter((f) => f.toLowerCase().endsWith('.png'))
    .sort();
  const report: ExportReport = { written: [], failures: [] };
  for (const name of frames) {
    const source = path.join(framesDir, name);
    try {
      const grid = extractGrid(model, readPng(source));
      const outName = name.replace(/\.png$/i, '.vmf');
      fs.writeFileSync(path.join(outDir, outName), encodeVmf(grid));
      report.written.push({
        file: outName,
        source: name,
        height: grid.height,
        width: grid.width,
        channels: grid.channels,
        stride: grid.stride,
      });
    } catch (err) {
      report.failures.push({ source: name, error: String(err) });
    }
  }
  fs.writeFileSync(
    path.join(outDir, 'manifest.json'),
    JSON.stringify({ files: report.written, failures: report.failures }, null, 2),
  );
  return report;
}

function parseArgs(argv: string[]): Record<string, string> {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || argv[i + 1] === undefined) {
      throw new Error(`bad argument ${argv[i]}`);
    }
    args[argv[i].slice(2)] = argv[i + 1];
  }
  return args;
}

async function main() {
  const args = parseArgs(process.argv.slice(2));
  if (!args.frames || !args.out) {
    console.error(
      'usage: vmf-export --frames DIR --out DIR [--layer NAME] [--model DIR] [--seed N]',
    );
    process.exit(2);
  }
  const report = await exportFrames(args.frames, args.out, {
    layer: args.layer,
    modelDir: args.model,
    seed: args.seed ? Number(args.seed) : undefined,
  });
  for (const entry of report.written) {
    console.log(`${entry.source}: ${entry.height}x${entry.width}x${entry.channels}`);
  }
  for (const failure of report.failures) {
    console.error(`${failure.source}: ${failure.error}`);
  }
  process.exit(report.failures.length ? 1 : 0);
}

if (require.main === module) {
  main().catch((err) => {
    console.error(err);
    process.exit(1);
  });
}
