/**
 * Backbone construction and loading.
 *
 * Two paths: a built-in convolutional stack with deterministic seeded weights
 * (runs anywhere, no downloads), and a loader for tfjs LayersModel
 * directories (model.json + weight shards) for genuinely pretrained nets.
 * Either way the exporter taps a named layer and resamples its grid to
 * stride 8 when the native stride differs.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

/** Deterministic PRNG so built-in backbone weights never vary. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function seededTensor(shape: number[], rng: () => number, scale: number): tf.Tensor {
  const size = shape.reduce((a, b) => a * b, 1);
  const values = new Float32Array(size);
  for (let i = 0; i < size; i++) {
    values[i] = (rng() * 2 - 1) * scale;
  }
  return tf.tensor(values, shape);
}

export const BUILTIN_LAYERS = ['block1', 'block2', 'block3'] as const;
export const DEFAULT_LAYER = 'block3'; // native stride 8

/** Three stride-2 conv blocks; block3 output is 8x smaller than the input. */
export function buildBuiltinBackbone(seed = 1234): tf.LayersModel {
  const input = tf.input({ shape: [null, null, 3] as unknown as number[] });
  const rng = mulberry32(seed);
  let x = input;
  const channels = [16, 32, 64];
  channels.forEach((filters, i) => {
    const conv = tf.layers.conv2d({
      filters,
      kernelSize: 3,
      strides: 2,
      padding: 'same',
      activation: i < channels.length - 1 ? 'relu' : 'linear',
      name: BUILTIN_LAYERS[i],
    });
    x = conv.apply(x) as tf.SymbolicTensor;
    const inCh = i === 0 ? 3 : channels[i - 1];
    const fanIn = 3 * 3 * inCh;
    conv.setWeights([
      seededTensor([3, 3, inCh, filters], rng, Math.sqrt(2 / fanIn)),
      tf.zeros([filters]),
    ]);
  });
  return tf.model({ inputs: input, outputs: x });
}

/** Truncate a model at the named layer, mobilenet-feature style. */
export function layerOutput(model: tf.LayersModel, layerName: string): tf.LayersModel {
  const layer = model.getLayer(layerName);
  return tf.model({ inputs: model.inputs, outputs: layer.output as tf.SymbolicTensor });
}

/** Minimal directory IO for tfjs LayersModel artifacts (no tfjs-node). */
function directorySaveHandler(dir: string): tf.io.IOHandler {
  return {
    save: async (artifacts: tf.io.ModelArtifacts) => {
      fs.mkdirSync(dir, { recursive: true });
      const weightsName = 'weights.bin';
      const manifest = [
        { paths: [weightsName], weights: artifacts.weightSpecs ?? [] },
      ];
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy ?? null,
        weightsManifest: manifest,
      };
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(modelJson));
      fs.writeFileSync(path.join(dir, weightsName), Buffer.from(artifacts.weightData as ArrayBuffer));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      };
    },
  };
}

function directoryLoadHandler(dir: string): tf.io.IOHandler {
  return {
    load: async (): Promise<tf.io.ModelArtifacts> => {
      const modelJson = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf-8'));
      const manifest = modelJson.weightsManifest as Array<{
        paths: string[];
        weights: tf.io.WeightsManifestEntry[];
      }>;
      const buffers: Buffer[] = [];
      const weightSpecs: tf.io.WeightsManifestEntry[] = [];
      for (const group of manifest) {
        weightSpecs.push(...group.weights);
        for (const p of group.paths) {
          buffers.push(fs.readFileSync(path.join(dir, p)));
        }
      }
      const weightData = Buffer.concat(buffers);
      return {
        modelTopology: modelJson.modelTopology,
        format: modelJson.format,
        generatedBy: modelJson.generatedBy,
        weightSpecs,
        weightData: weightData.buffer.slice(
          weightData.byteOffset,
          weightData.byteOffset + weightData.byteLength,
        ),
      };
    },
  };
}

export async function saveModelDir(model: tf.LayersModel, dir: string): Promise<void> {
  await model.save(directorySaveHandler(dir));
}

export async function loadModelDir(dir: string): Promise<tf.LayersModel> {
  return tf.loadLayersModel(directoryLoadHandler(dir));
}
