import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { buildBuiltinBackbone, loadModelDir, layerOutput, saveModelDir } from '../src/backbone';
import { writeGrayPng, writePng, RgbImage } from '../src/images';
import { exportFrames, extractGrid, resolveModel } from '../src/export';
import { decodeVmf, encodeVmf } from '../src/vmf';

const PYTHON = process.env.PYTHON ?? 'python3';

let workDir: string;

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), 'vmf-exporter-'));
});

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

/** Textured stand-in for real footage: gradients, noise, and a moving blob. */
function texturedFrame(width: number, height: number, t: number): RgbImage {
  const rgb = new Uint8Array(width * height * 3);
  const cx = width / 4 + t * 6;
  const cy = height / 2;
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = (y * width + x) * 3;
      const noise = ((x * 7919 + y * 104729 + 13) % 41) - 20;
      rgb[i] = clamp(40 + (160 * x) / width + noise);
      rgb[i + 1] = clamp(150 - (90 * y) / height + noise);
      rgb[i + 2] = clamp(60 + 40 * Math.sin(x / 17) + noise);
      const inBlob = Math.hypot(x - cx, y - cy) < Math.min(width, height) / 5;
      if (inBlob) {
        rgb[i] = clamp(210 + noise);
        rgb[i + 1] = clamp(60 + noise);
        rgb[i + 2] = clamp(50 + noise);
      }
    }
  }
  return { width, height, rgb };
}

function clamp(v: number): number {
  return Math.max(0, Math.min(255, Math.round(v)));
}

function validateWithPrimaryReader(file: string): { h: number; w: number; c: number; s: number } {
  const script =
    'import json, sys\n' +
    'from matchprop.io import read_feature_file\n' +
    'm = read_feature_file(sys.argv[1])\n' +
    'print(json.dumps({"h": m.height, "w": m.width, "c": m.channels, "s": m.stride}))\n';
  const out = execFileSync(PYTHON, ['-c', script, file], { encoding: 'utf-8' });
  return JSON.parse(out.trim());
}

describe('vmf encoding', () => {
  it('round-trips through its own decoder', () => {
    const data = Float32Array.from({ length: 2 * 3 * 4 }, (_, i) => i / 7 - 1);
    const grid = { height: 2, width: 3, channels: 4, stride: 8, data };
    const back = decodeVmf(encodeVmf(grid));
    expect(back.height).toBe(2);
    expect(back.width).toBe(3);
    expect(back.channels).toBe(4);
    expect(back.stride).toBe(8);
    expect(Array.from(back.data)).toEqual(Array.from(data));
  });

  it('rejects non-finite payloads', () => {
    const data = new Float32Array(4);
    data[2] = Infinity;
    expect(() => encodeVmf({ height: 1, width: 2, channels: 2, stride: 8, data })).toThrow(
      /non-finite/,
    );
  });
});

describe('built-in backbone', () => {
  it('is deterministic for a fixed seed', () => {
    const frame = texturedFrame(64, 48, 0);
    const a = extractGrid(layerOutput(buildBuiltinBackbone(7), 'block3'), frame);
    const b = extractGrid(layerOutput(buildBuiltinBackbone(7), 'block3'), frame);
    expect(Buffer.from(a.data.buffer).equals(Buffer.from(b.data.buffer))).toBe(true);
  });

  it('survives a save/load round trip through a model directory', async () => {
    const dir = path.join(workDir, 'saved-model');
    const model = buildBuiltinBackbone(42);
    await saveModelDir(model, dir);
    const loaded = await loadModelDir(dir);
    const frame = texturedFrame(64, 48, 1);
    const a = extractGrid(layerOutput(model, 'block3'), frame);
    const b = extractGrid(layerOutput(loaded, 'block3'), frame);
    for (let i = 0; i < a.data.length; i++) {
      expect(Math.abs(a.data[i] - b.data[i])).toBeLessThan(1e-6);
    }
  });

  it('resamples non-stride-8 layers onto the stride-8 grid', async () => {
    const model = await resolveModel(undefined, 'block2'); // native stride 4
    const grid = extractGrid(model, texturedFrame(96, 64, 0));
    expect(grid.height).toBe(8);
    expect(grid.width).toBe(12);
    expect(grid.stride).toBe(8);
  });

  it('L2-normalizes channels per pixel', async () => {
    const model = await resolveModel();
    const grid = extractGrid(model, texturedFrame(64, 48, 2));
    for (let p = 0; p < grid.height * grid.width; p++) {
      let sq = 0;
      for (let c = 0; c < grid.channels; c++) {
        sq += grid.data[p * grid.channels + c] ** 2;
      }
      expect(Math.abs(Math.sqrt(sq) - 1)).toBeLessThan(1e-4);
    }
  });
});

describe('exporter conformance', () => {
  it('a 480x854 frame yields a 60x107 grid that the primary reader accepts', async () => {
    const framesDir = path.join(workDir, 'big-frames');
    fs.mkdirSync(framesDir, { recursive: true });
    writePng(path.join(framesDir, '00001.png'), texturedFrame(854, 480, 0));
    const outDir = path.join(workDir, 'big-out');
    const report = await exportFrames(framesDir, outDir);
    expect(report.failures).toEqual([]);
    expect(report.written).toHaveLength(1);
    expect(report.written[0].height).toBe(60);
    expect(report.written[0].width).toBe(107);
    const shape = validateWithPrimaryReader(path.join(outDir, '00001.vmf'));
    expect(shape).toEqual({ h: 60, w: 107, c: report.written[0].channels, s: 8 });
  }, 120_000);

  it('identical frames produce byte-identical feature files', async () => {
    const framesDir = path.join(workDir, 'twin-frames');
    fs.mkdirSync(framesDir, { recursive: true });
    const frame = texturedFrame(96, 64, 3);
    writePng(path.join(framesDir, '00001.png'), frame);
    writePng(path.join(framesDir, '00002.png'), frame);
    const outDir = path.join(workDir, 'twin-out');
    const report = await exportFrames(framesDir, outDir);
    expect(report.failures).toEqual([]);
    const a = fs.readFileSync(path.join(outDir, '00001.vmf'));
    const b = fs.readFileSync(path.join(outDir, '00002.vmf'));
    expect(a.equals(b)).toBe(true);
  }, 60_000);

  it('unreadable frames fail per-file while others are still written', async () => {
    const framesDir = path.join(workDir, 'mixed-frames');
    fs.mkdirSync(framesDir, { recursive: true });
    writePng(path.join(framesDir, '00001.png'), texturedFrame(64, 48, 0));
    fs.writeFileSync(path.join(framesDir, '00002.png'), 'not a png');
    const outDir = path.join(workDir, 'mixed-out');
    const report = await exportFrames(framesDir, outDir);
    expect(report.written.map((e) => e.file)).toEqual(['00001.vmf']);
    expect(report.failures).toHaveLength(1);
    const manifest = JSON.parse(fs.readFileSync(path.join(outDir, 'manifest.json'), 'utf-8'));
    expect(manifest.failures).toHaveLength(1);
  }, 60_000);

  it('propagate runs on 10 exported frames and produces nonempty masks', async () => {
    const framesDir = path.join(workDir, 'seq-frames');
    fs.mkdirSync(framesDir, { recursive: true });
    const width = 192;
    const height = 112;
    for (let t = 0; t < 10; t++) {
      writePng(path.join(framesDir, `${String(t + 1).padStart(5, '0')}.png`), texturedFrame(width, height, t));
    }
    const featsDir = path.join(workDir, 'seq-feats');
    const report = await exportFrames(framesDir, featsDir);
    expect(report.failures).toEqual([]);
    expect(report.written).toHaveLength(10);

    // template: the blob of frame 0, known analytically
    const labels = new Uint8Array(width * height);
    const cx = width / 4;
    const cy = height / 2;
    const radius = Math.min(width, height) / 5;
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        if (Math.hypot(x - cx, y - cy) < radius) {
          labels[y * width + x] = 1;
        }
      }
    }
    const template = path.join(workDir, 'template.png');
    writeGrayPng(template, width, height, labels);

    const runDir = path.join(workDir, 'seq-run');
    execFileSync(
      'matchprop',
      ['propagate', '--features', featsDir, '--template', template, '--out', runDir,
       '--softmax-temp', '0.1', '--dc', '60'],
      { encoding: 'utf-8' },
    );
    const maskCheck =
      'import sys, numpy as np\n' +
      'from matchprop.io import load_mask\n' +
      'import glob\n' +
      'files = sorted(glob.glob(sys.argv[1] + "/masks/*.png"))\n' +
      'assert len(files) == 10, len(files)\n' +
      'for f in files:\n' +
      '    assert load_mask(f).labels.any(), f\n' +
      'print("ok")\n';
    const out = execFileSync(PYTHON, ['-c', maskCheck, runDir], { encoding: 'utf-8' });
    expect(out.trim()).toBe('ok');
  }, 180_000);
});
