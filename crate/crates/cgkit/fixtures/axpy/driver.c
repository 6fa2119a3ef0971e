/* AXPY driver shared by all variants */
//_connector:driver
//_param:N = length
//_param:a = 1.0
//_param:x = h_x
//_param:y = h_y
//_param:k = 2
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
//_link:include

//_link:function

int main(void) {
  const int length = 1 << 20;
  //_link:variables
  float *h_x = (float *)malloc(length * sizeof(float));
  float *h_y = (float *)malloc(length * sizeof(float));
  for (int i = 0; i < length; i++) {
    h_x[i] = 1.0f;
    h_y[i] = 2.0f;
  }
  //_link:setup
  //_link:execute
  float expected = 2.0f + (${k} + 1) * ${a}f;
  float max_err = 0.0f;
  for (int i = 0; i < length; i++) {
    max_err = fmaxf(max_err, fabsf(h_y[i] - expected));
  }
  printf("max error %g\n", max_err);
  //_link:clean
  free(h_x);
  free(h_y);
  return 0;
}
