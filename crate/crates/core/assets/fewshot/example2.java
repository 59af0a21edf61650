@Test
public void testReadPayloadTriggersReadValue() {
    String json = "[\"ch.qos.logback.core.db.DriverManagerConnectionSource\", {\"url\":\"jdbc:h2:mem:\"}]";
    JsonCodec codec = new JsonCodec();
    MethodCallInterceptor.interceptor("com.fasterxml.jackson.databind.ObjectMapper", "readValue", new Object[]{json});
    try {
        codec.readPayload(json, Object.class);
    } catch (Exception e) {
        // deserialization errors are expected for crafted input
    }
    assertTrue(MethodCallInterceptor.isTriggered());
    assertTrue(MethodCallInterceptor.isConditionMet());
}
