@Test
public void testRenderTemplateTriggersEvaluate() {
    String template = "#set($x = '')$x.class.forName('java.lang.Runtime')";
    TemplateRenderer renderer = new TemplateRenderer();
    MethodCallInterceptor.interceptor("org.apache.velocity.app.VelocityEngine", "evaluate", new Object[]{template});
    try {
        renderer.render(template, new java.util.HashMap<String, Object>());
    } catch (Exception e) {
        // rendering may abort after the engine has been reached
    }
    assertTrue(MethodCallInterceptor.isTriggered());
    assertTrue(MethodCallInterceptor.isConditionMet());
}
