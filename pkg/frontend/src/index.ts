export { BACKBONES, extractFeatures, featureDim } from "./backbone.js";
export { annotationDocument, checkFrameCounts, convertAnnotations,
         writeConverted } from "./convert.js";
export type { ConvertedVideo, ConvertResult } from "./convert.js";
export { ConversionError, ExtractionError, FormatError, UsageError,
         exitCodeFor } from "./errors.js";
export { extractSequence, extractToFile, listFrameFiles } from "./extract.js";
export type { ExtractOptions } from "./extract.js";
export { decodeImageFile, decodePpm, encodePpm, imageExtensions } from "./image.js";
export type { RgbImage } from "./image.js";
export { matGet, readMat } from "./mat.js";
export type { MatFile, MatMatrix } from "./mat.js";
export { CHANNEL_MEAN, CHANNEL_STD, CROP_TO, RESIZE_TO, centerCrop,
         lanczosResize, preprocess } from "./preprocess.js";
export { TOLERANCE, defaultBundleDir, runSelftest } from "./selftest.js";
export type { SelftestReport } from "./selftest.js";
export { decodeFeatures, encodeFeatures, makeSequence, readFeatures,
         writeFeatures } from "./vft.js";
export type { FeatureSequence } from "./vft.js";
export { decodeY4m } from "./y4m.js";
export type { Y4mVideo } from "./y4m.js";
