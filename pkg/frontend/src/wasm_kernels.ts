/**
 * The WASM backend ships inference kernels for conv nets but not
 * Conv2DBackpropFilter, which training needs. For stride-1, dilation-1,
 * NHWC convolutions (the only kind in this model) the filter gradient is
 * itself a convolution:
 *
 *   dW[kh,kw,ci,co] = sum_{b,i,j} x_pad[b,i+kh,j+kw,ci] * dy[b,i,j,co]
 *                   = conv2d(transpose(x,[3,1,2,0]), transpose(dy,[1,2,0,3]))
 *
 * with the original padding, transposed back to [kh,kw,ci,co]. Register
 * that composition as the missing kernel so the whole training graph runs
 * on WASM.
 */

import * as tf from "@tensorflow/tfjs";

function asTensor4D(info: tf.TensorInfo): tf.Tensor4D {
  return tf.engine().makeTensorFromTensorInfo(info) as tf.Tensor4D;
}

export function registerWasmTrainingKernels(): void {
  if (tf.getKernelsForBackend("wasm").some((k) => k.kernelName === "Conv2DBackpropFilter")) {
    return;
  }
  tf.registerKernel({
    kernelName: "Conv2DBackpropFilter",
    backendName: "wasm",
    kernelFunc: ({ inputs, attrs }) => {
      const { x, dy } = inputs as { x: tf.TensorInfo; dy: tf.TensorInfo };
      const { strides, pad, dataFormat, filterShape } = attrs as unknown as {
        strides: number | [number, number];
        pad: "valid" | "same" | number;
        dataFormat: "NHWC" | "NCHW";
        filterShape: [number, number, number, number];
      };
      const strideList = typeof strides === "number" ? [strides, strides] : strides;
      if (strideList.some((s) => s !== 1)) {
        throw new Error("wasm Conv2DBackpropFilter shim supports stride 1 only");
      }
      if (dataFormat !== "NHWC") {
        throw new Error("wasm Conv2DBackpropFilter shim supports NHWC only");
      }
      const [kh, kw] = filterShape;
      let padding: "valid" | [[number, number], [number, number], [number, number], [number, number]];
      if (pad === "valid" || pad === 0) {
        padding = "valid";
      } else if (pad === "same") {
        if (kh % 2 !== 1 || kw % 2 !== 1) {
          throw new Error("wasm Conv2DBackpropFilter shim supports odd 'same' kernels only");
        }
        padding = [
          [0, 0],
          [(kh - 1) / 2, (kh - 1) / 2],
          [(kw - 1) / 2, (kw - 1) / 2],
          [0, 0],
        ];
      } else {
        padding = [[0, 0], [pad, pad], [pad, pad], [0, 0]];
      }
      return tf.tidy(() => {
        const xT = tf.transpose(asTensor4D(x), [3, 1, 2, 0]); // [Ci,H,W,B]
        const dyT = tf.transpose(asTensor4D(dy), [1, 2, 0, 3]); // [Ho,Wo,B,Co]
        const grad = tf.conv2d(
          xT,
          dyT as unknown as tf.Tensor4D,
          1,
          padding as unknown as "valid",
        );
        const result = tf.transpose(grad, [1, 2, 0, 3]); // [kh,kw,Ci,Co]
        return tf.engine().keep(result);
      });
    },
  });
}
