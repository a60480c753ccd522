// The feature network. Two presets are exposed, named after the classic
// backbones whose output widths they reproduce (googlenet -> 1024 floats
// per frame, resnet50 -> 2048) so downstream files interoperate. The
// network itself is a fixed-weight reference backbone: a small strided
// convnet whose weights derive from a seeded generator, giving bit-stable
// features on any machine with zero downloads. It is not the pretrained
// original; swap-in of real weights is a deliberate non-goal here.

import { UsageError } from "./errors.js";
import { CROP_TO } from "./preprocess.js";

export const BACKBONES: Record<string, number> = {
  googlenet: 1024,
  resnet50: 2048,
};

export function featureDim(backbone: string): number {
  const dim = BACKBONES[backbone];
  if (!dim) {
    throw new UsageError(
      `unknown backbone '${backbone}' (expected ${Object.keys(BACKBONES).join(" or ")})`);
  }
  return dim;
}

// mulberry32: tiny 32-bit generator; integer ops only, stable everywhere
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

function uniformWeights(label: string, count: number, fanIn: number): Float32Array {
  const next = mulberry32(fnv1a(label));
  const limit = Math.sqrt(6 / fanIn);
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) out[i] = (next() * 2 - 1) * limit;
  return out;
}

interface ConvLayer {
  kernel: number;
  stride: number;
  pad: number;
  inCh: number;
  outCh: number;
  /** [kernel, kernel, inCh, outCh] */
  w: Float32Array;
  b: Float32Array;
}

interface Net {
  convs: ConvLayer[];
  proj: Float32Array;   // [lastCh, outDim]
  projB: Float32Array;
  outDim: number;
}

const netCache = new Map<string, Net>();

function buildNet(backbone: string): Net {
  const cached = netCache.get(backbone);
  if (cached) return cached;
  const outDim = featureDim(backbone);
  const shapes: Array<[number, number, number, number, number]> = [
    // kernel, stride, pad, inCh, outCh
    [8, 8, 0, 3, 24],
    [3, 2, 1, 24, 48],
    [3, 2, 1, 48, 96],
  ];
  const convs = shapes.map(([kernel, stride, pad, inCh, outCh], i) => ({
    kernel, stride, pad, inCh, outCh,
    w: uniformWeights(`${backbone}/conv${i}/w`, kernel * kernel * inCh * outCh,
                      kernel * kernel * inCh),
    b: uniformWeights(`${backbone}/conv${i}/b`, outCh, outCh),
  }));
  const lastCh = shapes[shapes.length - 1][4];
  const net: Net = {
    convs,
    proj: uniformWeights(`${backbone}/proj/w`, lastCh * outDim, lastCh),
    projB: uniformWeights(`${backbone}/proj/b`, outDim, outDim),
    outDim,
  };
  netCache.set(backbone, net);
  return net;
}

function convForward(x: Float32Array, size: number, layer: ConvLayer):
    { out: Float32Array; size: number } {
  const { kernel, stride, pad, inCh, outCh, w, b } = layer;
  const outSize = Math.floor((size + 2 * pad - kernel) / stride) + 1;
  const out = new Float32Array(outSize * outSize * outCh);
  for (let oy = 0; oy < outSize; oy++) {
    for (let ox = 0; ox < outSize; ox++) {
      const base = (oy * outSize + ox) * outCh;
      for (let oc = 0; oc < outCh; oc++) {
        let acc = b[oc];
        for (let ky = 0; ky < kernel; ky++) {
          const sy = oy * stride + ky - pad;
          if (sy < 0 || sy >= size) continue;
          for (let kx = 0; kx < kernel; kx++) {
            const sx = ox * stride + kx - pad;
            if (sx < 0 || sx >= size) continue;
            const px = (sy * size + sx) * inCh;
            const wx = ((ky * kernel + kx) * inCh) * outCh + oc;
            for (let ic = 0; ic < inCh; ic++) {
              acc += x[px + ic] * w[wx + ic * outCh];
            }
          }
        }
        out[base + oc] = acc > 0 ? acc : 0;      // relu
      }
    }
  }
  return { out, size: outSize };
}

/**
 * One frame in (preprocessed HWC floats, CROP_TO square), one feature row
 * out: strided convs, global average pool, linear projection.
 */
export function extractFeatures(pixels: Float32Array, backbone: string): Float32Array {
  if (pixels.length !== CROP_TO * CROP_TO * 3) {
    throw new UsageError(
      `expected ${CROP_TO * CROP_TO * 3} preprocessed values, got ${pixels.length}`);
  }
  const net = buildNet(backbone);
  let x = pixels;
  let size = CROP_TO;
  for (const layer of net.convs) {
    const step = convForward(x, size, layer);
    x = step.out;
    size = step.size;
  }
  const ch = net.convs[net.convs.length - 1].outCh;
  const pooled = new Float64Array(ch);
  const cells = size * size;
  for (let i = 0; i < cells; i++) {
    for (let c = 0; c < ch; c++) pooled[c] += x[i * ch + c];
  }
  for (let c = 0; c < ch; c++) pooled[c] /= cells;

  const row = new Float32Array(net.outDim);
  for (let j = 0; j < net.outDim; j++) {
    let acc = net.projB[j];
    for (let c = 0; c < ch; c++) acc += pooled[c] * net.proj[c * net.outDim + j];
    row[j] = acc;
  }
  return row;
}
