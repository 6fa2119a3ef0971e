//<_connector:function file="function.c">
void fp_op(int n, float a, float *x, float *y) {
  for (int i=0; i<n; i++) {
    //<_link:kernel>
    //<_connector:kernel file="kernel.c">
    y[i] += a * x[i];
    //</_connector:kernel>
    //</_link:kernel>
  }
}
//</_connector:function>
